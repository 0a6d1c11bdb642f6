// Display formatting. These must agree digit-for-digit with the server's
// own formatting (the service displays ER$ with apostrophe grouping), and
// the leaderboard CSV must be byte-identical to the CLI grade export.

import type { LeaderboardRow } from './types.js'

export function fmtEr(centi: number): string {
  const sign = centi < 0 ? '-' : ''
  const abs = Math.abs(centi)
  const whole = Math.floor(abs / 100)
  const cents = abs % 100
  const grouped = whole.toString().replace(/\B(?=(\d{3})+(?!\d))/g, "'")
  return `${sign}ER$ ${grouped}.${cents.toString().padStart(2, '0')}`
}

export function fmtShares(micro: number): string {
  const sign = micro < 0 ? '-' : ''
  const abs = Math.abs(micro)
  const whole = Math.floor(abs / 1_000_000)
  const frac = abs % 1_000_000
  return `${sign}${whole}.${frac.toString().padStart(6, '0')}`
}

/** Same bytes as the `grade` CLI output: header + one row per participant,
 * "\n" separators, trailing newline, empty field for a missing ex-post. */
export function leaderboardCsv(rows: LeaderboardRow[]): string {
  const lines = ['rank,participant_id,ex_ante_centi,ex_post_centi,total_contributed_bytes']
  for (const r of rows) {
    const exPost = r.ex_post_centi === null ? '' : String(r.ex_post_centi)
    lines.push(`${r.rank},${r.participant_id},${r.ex_ante_centi},${exPost},${r.total_contributed_bytes}`)
  }
  return lines.join('\n') + '\n'
}
