// Journal event stream over fetch + ReadableStream (works in browsers and
// node). Events are deduplicated by sequence number and the subscription
// resumes from the last seen seq after a reconnect, so delivery to the
// handler is exactly-once in seq order.

import type { EventRecord } from './types.js'

/** Incremental parser for text/event-stream frames. */
export class SseParser {
  private buffer = ''

  feed(chunk: string): EventRecord[] {
    this.buffer += chunk
    const events: EventRecord[] = []
    let sep: number
    while ((sep = this.buffer.indexOf('\n\n')) >= 0) {
      const frame = this.buffer.slice(0, sep)
      this.buffer = this.buffer.slice(sep + 2)
      const dataLines = frame
        .split('\n')
        .filter((line) => line.startsWith('data:'))
        .map((line) => line.slice(5).trimStart())
      if (dataLines.length === 0) continue // comment/keep-alive frame
      events.push(JSON.parse(dataLines.join('\n')) as EventRecord)
    }
    return events
  }
}

export interface SubscribeOptions {
  baseUrl: string
  token: string
  sinceSeq: number
  onEvent: (event: EventRecord) => void
  signal?: AbortSignal
  /** reconnect delay in ms; retries forever until aborted */
  retryMs?: number
}

export async function subscribeEvents(options: SubscribeOptions): Promise<void> {
  let lastSeen = options.sinceSeq
  const retryMs = options.retryMs ?? 1000
  for (;;) {
    if (options.signal?.aborted) return
    try {
      const response = await fetch(
        `${options.baseUrl}/events?since_seq=${lastSeen}`,
        {
          headers: { Authorization: `Bearer ${options.token}` },
          signal: options.signal ?? null,
        },
      )
      if (!response.ok || !response.body) throw new Error(`stream failed: ${response.status}`)
      const reader = response.body.getReader()
      const decoder = new TextDecoder()
      const parser = new SseParser()
      for (;;) {
        const { done, value } = await reader.read()
        if (done) break
        for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
          if (event.seq <= lastSeen) continue // at-least-once upstream; dedup here
          lastSeen = event.seq
          options.onEvent(event)
        }
      }
    } catch (err) {
      if (options.signal?.aborted) return
    }
    await new Promise((resolve) => setTimeout(resolve, retryMs))
  }
}
