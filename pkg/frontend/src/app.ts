// Browser bootstrap: connect, subscribe to the event stream, route between
// screens and wire the order/expost forms. All data flows through state.ts;
// no number on screen is computed locally.

import { ApiClient, ApiError } from './api.js'
import { applyEvent, newSession, refresh, track } from './state.js'
import { subscribeEvents } from './sse.js'
import {
  renderInstructorConsole,
  renderMarketScreen,
  renderPortfolioScreen,
} from './views.js'

interface Session {
  api: ApiClient
  participantId: string
  abort: AbortController
}

const state = newSession()
let session: Session | null = null
let currentProject: string | null = null

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector)
  if (!node) throw new Error(`missing element: ${selector}`)
  return node
}

function centiFromEr(text: string): number {
  const value = Math.round(parseFloat(text) * 100)
  if (!Number.isFinite(value) || value <= 0) throw new Error(`bad ER$ amount: ${text}`)
  return value
}

function microFromShares(text: string): number {
  const value = Math.round(parseFloat(text) * 1_000_000)
  if (!Number.isFinite(value) || value <= 0) throw new Error(`bad share quantity: ${text}`)
  return value
}

async function render(): Promise<void> {
  if (!session) return
  await refresh(state, session.api)
  const main = el<HTMLElement>('#screen')
  const hash = window.location.hash || '#portfolio'
  if (hash.startsWith('#market/')) {
    const projectId = hash.slice('#market/'.length)
    if (currentProject !== projectId) {
      currentProject = projectId
      await track(state, session.api, { book: projectId, trades: projectId })
    }
    const project = state.projects.find((p) => p.project_id === projectId)
    const book = state.books.get(projectId)
    const trades = state.trades.get(projectId) ?? []
    main.innerHTML = project && book ? renderMarketScreen(project, book, trades) : 'loading…'
    wireTicket()
  } else if (hash === '#instructor') {
    try {
      const leaderboard = await session.api.getLeaderboard('ex_post')
      main.innerHTML = renderInstructorConsole(state.projects, leaderboard).html
    } catch (err) {
      if (err instanceof ApiError && err.body.error === 'MissingValuation') {
        main.innerHTML = renderInstructorConsole(state.projects, null).html
      } else {
        throw err
      }
    }
    wireExpost()
  } else {
    if (!state.portfolios.has(session.participantId)) {
      await track(state, session.api, { portfolio: session.participantId })
    }
    const portfolio = state.portfolios.get(session.participantId)
    main.innerHTML = portfolio ? renderPortfolioScreen(portfolio) : 'loading…'
  }
  const nav = state.projects
    .map((p) => `<a href="#market/${p.project_id}">${p.title}</a>`)
    .join(' · ')
  el<HTMLElement>('#nav').innerHTML =
    `<a href="#portfolio">portfolio</a> · <a href="#instructor">instructor</a> · ${nav}`
}

function wireTicket(): void {
  const form = document.querySelector<HTMLFormElement>('form.ticket')
  if (!form || !session) return
  const api = session.api
  form.addEventListener('submit', async (ev) => {
    ev.preventDefault()
    const errorBox = form.querySelector<HTMLElement>('.ticket-error')!
    errorBox.textContent = ''
    const data = new FormData(form)
    try {
      await api.submitOrder(
        form.dataset.project!,
        data.get('side') as 'BID' | 'ASK',
        centiFromEr(String(data.get('price_er'))),
        microFromShares(String(data.get('qty_shares'))),
      )
      // no optimistic update: the book re-renders when the journaled
      // OrderSubmitted event comes back on the stream
    } catch (err) {
      errorBox.textContent = err instanceof ApiError ? err.message : String(err)
    }
  })
}

function wireExpost(): void {
  if (!session) return
  const api = session.api
  for (const form of document.querySelectorAll<HTMLFormElement>('form.expost')) {
    form.addEventListener('submit', async (ev) => {
      ev.preventDefault()
      const value = String(new FormData(form).get('value_er'))
      try {
        await api.setExPost(form.dataset.project!, centiFromEr(value))
      } catch (err) {
        alert(err instanceof ApiError ? err.message : String(err))
      }
    })
  }
  const exportButton = document.querySelector<HTMLButtonElement>('.export-grades')
  exportButton?.addEventListener('click', async () => {
    const leaderboard = await api.getLeaderboard('ex_post')
    const view = renderInstructorConsole(state.projects, leaderboard)
    if (view.leaderboardCsv) {
      const blob = new Blob([view.leaderboardCsv], { type: 'text/csv' })
      const link = document.createElement('a')
      link.href = URL.createObjectURL(blob)
      link.download = 'grades.csv'
      link.click()
    }
  })
}

function connect(): void {
  const baseUrl = el<HTMLInputElement>('#base-url').value.replace(/\/$/, '')
  const token = el<HTMLInputElement>('#token').value.trim()
  const participantId = el<HTMLInputElement>('#participant').value.trim()
  session?.abort.abort()
  const abort = new AbortController()
  session = { api: new ApiClient(baseUrl, token), participantId, abort }
  void render()
  void subscribeEvents({
    baseUrl,
    token,
    sinceSeq: state.lastSeenSeq,
    signal: abort.signal,
    onEvent: (event) => {
      applyEvent(state, event)
      void render()
    },
  })
}

el<HTMLButtonElement>('#connect').addEventListener('click', connect)
window.addEventListener('hashchange', () => void render())
