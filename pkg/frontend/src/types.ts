// API payload shapes, mirroring the service's JSON responses exactly.
// All money is integer centi-ER$, all quantities integer micro-shares.

export type Side = 'BID' | 'ASK'
export type Role = 'student' | 'instructor'
export type LeaderboardMode = 'ex_ante' | 'ex_post'

export interface BookLevel {
  price_centi: number
  qty_micro: number
  orders: number
}

export interface BookSnapshot {
  project_id: string
  bids: BookLevel[]
  asks: BookLevel[]
  last_trade_price_centi: number
}

export interface ProjectInfo {
  project_id: string
  creator_id: string
  title: string
  created_ts: string
  body: string
  shares_outstanding_micro: number
  total_contributed_bytes: number
  last_trade_price_centi: number
  ex_post_value_centi: number | null
}

export interface HoldingRow {
  project_id: string
  free_micro: number
  reserved_micro: number
  last_trade_price_centi: number
}

export interface Portfolio {
  participant_id: string
  cash_centi: number
  reserved_cash_centi: number
  holdings: HoldingRow[]
  ex_ante_centi: number
  ex_ante_display: string
}

export interface TradeRow {
  trade_id: number
  project_id: string
  buyer_id: string
  seller_id: string
  price_centi: number
  qty_micro: number
  notional_centi: number
  ts: string
}

export interface LeaderboardRow {
  rank: number
  participant_id: string
  ex_ante_centi: number
  ex_post_centi: number | null
  total_contributed_bytes: number
}

export interface Leaderboard {
  mode: LeaderboardMode
  rows: LeaderboardRow[]
}

export interface OrderAck {
  order_id: number
  fills: { trade_id: number; price_centi: number; qty_micro: number; notional_centi: number }[]
}

export interface EventRecord {
  seq: number
  ts: string
  kind: string
  payload: Record<string, unknown>
}

export interface ApiErrorBody {
  error: string
  message: string
  projects?: string[]
}
