// Session state: a cache of API responses plus the event cursor.
//
// The UI is a pure client - nothing here is authoritative. Each journal
// event marks the resources it touches as stale; `refresh` refetches stale
// resources from the API. Rendering only ever reads fetched responses, so
// every displayed number is traceable to an API response, and replaying
// events from the last seen seq reproduces the same view. Optimistic
// updates are deliberately absent: an order shows up only once its
// journaled OrderSubmitted event arrives.

import type { ApiClient } from './api.js'
import type {
  BookSnapshot,
  EventRecord,
  Leaderboard,
  Portfolio,
  ProjectInfo,
  TradeRow,
} from './types.js'

export interface SessionState {
  lastSeenSeq: number
  projects: ProjectInfo[]
  books: Map<string, BookSnapshot>
  trades: Map<string, TradeRow[]>
  portfolios: Map<string, Portfolio>
  leaderboard: Leaderboard | null
  staleProjects: boolean
  staleBooks: Set<string>
  staleTrades: Set<string>
  stalePortfolios: Set<string>
  staleLeaderboard: boolean
}

export function newSession(): SessionState {
  return {
    lastSeenSeq: 0,
    projects: [],
    books: new Map(),
    trades: new Map(),
    portfolios: new Map(),
    leaderboard: null,
    staleProjects: true,
    staleBooks: new Set(),
    staleTrades: new Set(),
    stalePortfolios: new Set(),
    staleLeaderboard: true,
  }
}

function str(payload: Record<string, unknown>, key: string): string {
  return String(payload[key] ?? '')
}

/** Mark the resources touched by a journal event as stale. */
export function applyEvent(state: SessionState, event: EventRecord): void {
  if (event.seq <= state.lastSeenSeq) return
  state.lastSeenSeq = event.seq
  const payload = event.payload
  switch (event.kind) {
    case 'AccountOpened':
      state.stalePortfolios.add(str(payload, 'participant_id'))
      state.staleLeaderboard = true
      break
    case 'ProjectCreated':
      state.staleProjects = true
      state.staleBooks.add(str(payload, 'project_id'))
      state.stalePortfolios.add(str(payload, 'creator_id'))
      state.staleLeaderboard = true
      break
    case 'RevisionIngested':
    case 'SharesIssued':
      state.staleProjects = true
      state.stalePortfolios.add(str(payload, 'participant_id'))
      state.staleLeaderboard = true
      break
    case 'OrderSubmitted':
    case 'OrderCancelled':
      state.staleBooks.add(str(payload, 'project_id') || '*')
      state.stalePortfolios.add(str(payload, 'participant_id'))
      break
    case 'TradeExecuted':
      state.staleProjects = true
      state.staleBooks.add(str(payload, 'project_id'))
      state.staleTrades.add(str(payload, 'project_id'))
      state.stalePortfolios.add(str(payload, 'buyer_id'))
      state.stalePortfolios.add(str(payload, 'seller_id'))
      state.staleLeaderboard = true
      break
    case 'ExPostValueSet':
      state.staleProjects = true
      state.staleLeaderboard = true
      break
    default:
      // unknown event kinds invalidate everything cheap to refetch
      state.staleProjects = true
      state.staleLeaderboard = true
  }
}

/** OrderCancelled events do not carry the project id; resolve '*' to all
 * book subscriptions. */
function staleBookIds(state: SessionState): string[] {
  if (state.staleBooks.has('*')) return [...state.books.keys()]
  return [...state.staleBooks].filter((projectId) => state.books.has(projectId))
}

/** Refetch every stale resource that the session is actually displaying. */
export async function refresh(state: SessionState, api: ApiClient): Promise<void> {
  if (state.staleProjects) {
    state.projects = await api.listProjects()
    state.staleProjects = false
  }
  for (const projectId of staleBookIds(state)) {
    state.books.set(projectId, await api.getBook(projectId))
  }
  state.staleBooks.clear()
  for (const projectId of [...state.staleTrades]) {
    if (state.trades.has(projectId)) {
      state.trades.set(projectId, await api.getTrades(projectId))
    }
  }
  state.staleTrades.clear()
  for (const participantId of [...state.stalePortfolios]) {
    if (state.portfolios.has(participantId)) {
      state.portfolios.set(participantId, await api.getPortfolio(participantId))
    }
  }
  state.stalePortfolios.clear()
}

/** Start tracking a resource (fetches it immediately). */
export async function track(
  state: SessionState,
  api: ApiClient,
  what: { book?: string; trades?: string; portfolio?: string },
): Promise<void> {
  if (what.book) state.books.set(what.book, await api.getBook(what.book))
  if (what.trades) state.trades.set(what.trades, await api.getTrades(what.trades))
  if (what.portfolio) state.portfolios.set(what.portfolio, await api.getPortfolio(what.portfolio))
}
