// Pure renderers: fetched API data in, HTML strings out. No DOM access
// here so the markup is unit-testable; app.ts injects the strings and
// wires form handlers.

import { fmtEr, fmtShares, leaderboardCsv } from './format.js'
import type {
  BookSnapshot,
  Leaderboard,
  Portfolio,
  ProjectInfo,
  TradeRow,
} from './types.js'

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

export function renderDepthLadder(book: BookSnapshot): string {
  const row = (price: number, qty: number, side: 'bid' | 'ask') =>
    `<tr class="${side}"><td class="price">${fmtEr(price)}</td>` +
    `<td class="qty">${fmtShares(qty)}</td></tr>`
  const asks = [...book.asks].reverse()
    .map((level) => row(level.price_centi, level.qty_micro, 'ask'))
  const bids = book.bids.map((level) => row(level.price_centi, level.qty_micro, 'bid'))
  const spread =
    `<tr class="last"><td colspan="2">last ${fmtEr(book.last_trade_price_centi)}</td></tr>`
  return (
    `<table class="depth" data-project="${esc(book.project_id)}">` +
    `<thead><tr><th>price</th><th>quantity</th></tr></thead>` +
    `<tbody>${asks.join('')}${spread}${bids.join('')}</tbody></table>`
  )
}

export function renderTrades(trades: TradeRow[], limit = 20): string {
  const rows = trades.slice(-limit).reverse().map(
    (t) =>
      `<tr><td>${t.trade_id}</td><td>${fmtEr(t.price_centi)}</td>` +
      `<td>${fmtShares(t.qty_micro)}</td><td>${esc(t.buyer_id)}</td>` +
      `<td>${esc(t.seller_id)}</td></tr>`,
  )
  return (
    '<table class="trades"><thead><tr><th>id</th><th>price</th><th>qty</th>' +
    `<th>buyer</th><th>seller</th></tr></thead><tbody>${rows.join('')}</tbody></table>`
  )
}

export function renderOrderTicket(projectId: string): string {
  return (
    `<form class="ticket" data-project="${esc(projectId)}">` +
    '<select name="side"><option>BID</option><option>ASK</option></select>' +
    '<input name="price_er" placeholder="price ER$" inputmode="decimal">' +
    '<input name="qty_shares" placeholder="quantity (shares)" inputmode="decimal">' +
    '<button type="submit">place order</button>' +
    '<span class="ticket-error" role="alert"></span></form>'
  )
}

export function renderMarketScreen(
  project: ProjectInfo,
  book: BookSnapshot,
  trades: TradeRow[],
): string {
  return (
    `<section class="market" data-project="${esc(project.project_id)}">` +
    `<h2>${esc(project.title)} <small>${esc(project.project_id)}</small></h2>` +
    `<p>last price ${fmtEr(project.last_trade_price_centi)} - ` +
    `${fmtShares(project.shares_outstanding_micro)} shares outstanding - ` +
    `${project.total_contributed_bytes} bytes contributed</p>` +
    renderDepthLadder(book) +
    renderOrderTicket(project.project_id) +
    renderTrades(trades) +
    '</section>'
  )
}

export function renderPortfolioScreen(portfolio: Portfolio): string {
  const holdings = portfolio.holdings.map(
    (h) =>
      `<tr><td>${esc(h.project_id)}</td><td>${fmtShares(h.free_micro)}</td>` +
      `<td>${fmtShares(h.reserved_micro)}</td>` +
      `<td>${fmtEr(h.last_trade_price_centi)}</td></tr>`,
  )
  return (
    `<section class="portfolio" data-participant="${esc(portfolio.participant_id)}">` +
    `<h2>${esc(portfolio.participant_id)}</h2>` +
    `<p class="ex-ante">portfolio value <strong>${fmtEr(portfolio.ex_ante_centi)}</strong></p>` +
    `<p>cash ${fmtEr(portfolio.cash_centi)} (plus ${fmtEr(portfolio.reserved_cash_centi)} reserved)</p>` +
    '<table class="holdings"><thead><tr><th>project</th><th>free</th><th>reserved</th>' +
    `<th>last price</th></tr></thead><tbody>${holdings.join('')}</tbody></table></section>`
  )
}

export interface InstructorView {
  html: string
  gradingEnabled: boolean
  missingValuations: string[]
  /** set when grading is enabled */
  leaderboardCsv: string | null
}

export function renderInstructorConsole(
  projects: ProjectInfo[],
  leaderboard: Leaderboard | null,
): InstructorView {
  const missing = projects
    .filter((p) => p.ex_post_value_centi === null)
    .map((p) => p.project_id)
  const projectRows = projects.map(
    (p) =>
      `<tr><td>${esc(p.project_id)}</td><td>${esc(p.title)}</td>` +
      `<td>${fmtEr(p.last_trade_price_centi)}</td>` +
      `<td>${p.ex_post_value_centi === null
        ? '<em class="missing">missing</em>'
        : fmtEr(p.ex_post_value_centi)}</td>` +
      `<td><form class="expost" data-project="${esc(p.project_id)}">` +
      '<input name="value_er" placeholder="ER$/share" inputmode="decimal">' +
      '<button type="submit">set</button></form></td></tr>',
  )
  const checklist = missing.length
    ? `<div class="grading-blocked">grading blocked, missing ex-post values:<ul>${missing
        .map((projectId) => `<li>${esc(projectId)}</li>`)
        .join('')}</ul></div>`
    : ''
  const gradingEnabled = missing.length === 0 && leaderboard !== null
  const csv = gradingEnabled && leaderboard ? leaderboardCsv(leaderboard.rows) : null
  const boardRows = gradingEnabled && leaderboard
    ? leaderboard.rows.map(
        (r) =>
          `<tr><td>${r.rank}</td><td>${esc(r.participant_id)}</td>` +
          `<td>${fmtEr(r.ex_ante_centi)}</td>` +
          `<td>${r.ex_post_centi === null ? '' : fmtEr(r.ex_post_centi)}</td>` +
          `<td>${r.total_contributed_bytes}</td></tr>`,
      )
    : []
  const board = gradingEnabled
    ? '<table class="leaderboard"><thead><tr><th>rank</th><th>participant</th>' +
      '<th>ex-ante</th><th>ex-post</th><th>bytes</th></tr></thead>' +
      `<tbody>${boardRows.join('')}</tbody></table>` +
      '<button class="export-grades">export grades CSV</button>'
    : ''
  const html =
    '<section class="instructor"><h2>instructor console</h2>' +
    '<table class="projects"><thead><tr><th>project</th><th>title</th><th>last price</th>' +
    `<th>ex-post</th><th></th></tr></thead><tbody>${projectRows.join('')}</tbody></table>` +
    checklist +
    board +
    '</section>'
  return { html, gradingEnabled, missingValuations: missing, leaderboardCsv: csv }
}
