// Typed client for the service HTTP API. Every screen's numbers come from
// these calls; the client never computes balances locally.

import type {
  ApiErrorBody,
  BookSnapshot,
  Leaderboard,
  LeaderboardMode,
  OrderAck,
  Portfolio,
  ProjectInfo,
  Side,
  TradeRow,
} from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
    readonly requestId: string,
  ) {
    super(`${body.error}: ${body.message} [${requestId}]`)
  }
}

let requestCounter = 0

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly token: string,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const requestId = `req-${Date.now()}-${++requestCounter}`
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    })
    if (!response.ok) {
      let detail: ApiErrorBody = { error: `HTTP${response.status}`, message: response.statusText }
      try {
        const parsed = (await response.json()) as { detail?: ApiErrorBody }
        if (parsed.detail && typeof parsed.detail === 'object') detail = parsed.detail
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail, requestId)
    }
    return (await response.json()) as T
  }

  openParticipant(participantId: string, endowmentCenti?: number): Promise<Portfolio> {
    return this.call('POST', '/participants', {
      participant_id: participantId,
      ...(endowmentCenti !== undefined ? { endowment_centi: endowmentCenti } : {}),
    })
  }

  createProject(title: string, initialText = ''): Promise<ProjectInfo> {
    return this.call('POST', '/projects', { title, initial_text: initialText })
  }

  listProjects(): Promise<ProjectInfo[]> {
    return this.call('GET', '/projects')
  }

  getProject(projectId: string): Promise<ProjectInfo> {
    return this.call('GET', `/projects/${projectId}`)
  }

  postRevision(projectId: string, afterText: string): Promise<{ bytes_counted: number; issued_micro: number }> {
    return this.call('POST', `/projects/${projectId}/revisions`, { after_text: afterText })
  }

  getPortfolio(participantId: string): Promise<Portfolio> {
    return this.call('GET', `/participants/${participantId}/portfolio`)
  }

  getBook(projectId: string, depth = 10): Promise<BookSnapshot> {
    return this.call('GET', `/book/${projectId}?depth=${depth}`)
  }

  submitOrder(projectId: string, side: Side, priceCenti: number, qtyMicro: number): Promise<OrderAck> {
    return this.call('POST', '/orders', {
      project: projectId,
      side,
      price_centi: priceCenti,
      qty_micro: qtyMicro,
    })
  }

  cancelOrder(orderId: number): Promise<{ order_id: number }> {
    return this.call('DELETE', `/orders/${orderId}`)
  }

  getTrades(projectId?: string): Promise<TradeRow[]> {
    const query = projectId ? `?project=${projectId}` : ''
    return this.call('GET', `/trades${query}`)
  }

  getLeaderboard(mode: LeaderboardMode): Promise<Leaderboard> {
    return this.call('GET', `/leaderboard?mode=${mode}`)
  }

  setExPost(projectId: string, valueCenti: number): Promise<{ project_id: string }> {
    return this.call('POST', '/expost', { project: projectId, value_centi: valueCenti })
  }
}
