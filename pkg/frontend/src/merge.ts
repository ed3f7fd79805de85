// Incremental transcript assembly from update deltas. Deltas may overlap or
// (after an error and re-poll) arrive out of order; the merger guarantees the
// rendered sequence never shows a gap or a duplicate.

import type { ChatMessage } from './types.js'

export class TranscriptMerger {
  private bySeq = new Map<number, ChatMessage>()
  private renderedThrough = 0

  /** Highest sequence number safe to use as the next `since` cursor. */
  get cursor(): number {
    return this.renderedThrough
  }

  get messages(): ChatMessage[] {
    const out: ChatMessage[] = []
    for (let seq = 1; seq <= this.renderedThrough; seq++) {
      out.push(this.bySeq.get(seq)!)
    }
    return out
  }

  /**
   * Absorb one delta; returns only the messages that newly became renderable,
   * in order. Duplicates are dropped; a message past a gap is buffered until
   * the gap fills.
   */
  add(incoming: ChatMessage[]): ChatMessage[] {
    for (const message of incoming) {
      if (!this.bySeq.has(message.seq)) {
        this.bySeq.set(message.seq, message)
      }
    }
    const appended: ChatMessage[] = []
    while (this.bySeq.has(this.renderedThrough + 1)) {
      this.renderedThrough += 1
      appended.push(this.bySeq.get(this.renderedThrough)!)
    }
    return appended
  }
}
