// The update loop: long-poll the server with the highest seen sequence
// number, merge deltas, surface errors without halting, back off on failure.

import { ApiClient, ApiError } from './api.js'
import { TranscriptMerger } from './merge.js'
import type { ChatMessage, UpdateDelta } from './types.js'

export interface PollHandlers {
  onAppend(messages: ChatMessage[]): void
  onDelta(delta: UpdateDelta): void
  onTransportError(error: unknown): void
  onAuthLost(): void
}

const BACKOFF_START_MS = 500
const BACKOFF_MAX_MS = 10_000

export class PollLoop {
  private merger = new TranscriptMerger()
  private running = false
  private backoffMs = BACKOFF_START_MS

  constructor(
    private api: ApiClient,
    private threadId: string,
    private handlers: PollHandlers,
    private sleep: (ms: number) => Promise<void> = ms => new Promise(r => setTimeout(r, ms)),
  ) {}

  get transcript(): ChatMessage[] {
    return this.merger.messages
  }

  stop(): void {
    this.running = false
  }

  async start(): Promise<void> {
    this.running = true
    while (this.running) {
      let delta: UpdateDelta
      try {
        delta = await this.api.updates(this.threadId, this.merger.cursor, true)
        this.backoffMs = BACKOFF_START_MS
      } catch (error) {
        if (error instanceof ApiError && error.status === 401) {
          this.running = false
          this.handlers.onAuthLost()
          return
        }
        this.handlers.onTransportError(error)
        await this.sleep(this.backoffMs)
        this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS)
        continue
      }
      const appended = this.merger.add(delta.messages)
      if (appended.length) this.handlers.onAppend(appended)
      this.handlers.onDelta(delta)
      if (delta.state === 'Completed' || delta.state === 'Deleted') {
        this.running = false
      }
    }
  }

  /** One synchronous-ish tick without waiting; used on page load. */
  async prime(): Promise<UpdateDelta> {
    const delta = await this.api.updates(this.threadId, this.merger.cursor, false)
    const appended = this.merger.add(delta.messages)
    if (appended.length) this.handlers.onAppend(appended)
    this.handlers.onDelta(delta)
    return delta
  }
}
