import type { ApiClient } from './api'
import type { EventKind } from './types'

export interface QueuedEvent {
  subject_id: string
  kind: EventKind
  at_ms: number
  wall_time: number
  value: number | null
}

/** Ordered telemetry queue.
 *
 *  Every interaction enqueues exactly one event; a single in-flight flush
 *  posts them strictly FIFO so the server's per-session ordering rule is
 *  never violated. Failed posts are retried with exponential backoff
 *  without reordering. */
export class EventQueue {
  private queue: QueuedEvent[] = []
  private flushing = false
  private retryDelayMs: number

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly opts: {
      now?: () => number
      sleep?: (ms: number) => Promise<void>
      baseRetryMs?: number
      maxRetries?: number
    } = {},
  ) {
    this.retryDelayMs = opts.baseRetryMs ?? 500
  }

  get pending(): number {
    return this.queue.length
  }

  track(kind: EventKind, subjectId: string, atMs = 0, value: number | null = null): void {
    const now = this.opts.now ?? (() => Date.now() / 1000)
    this.queue.push({
      kind,
      subject_id: subjectId,
      at_ms: atMs,
      wall_time: now(),
      value,
    })
    // background delivery; a failed event stays queued and the error
    // resurfaces on the next awaited flush() or drain()
    void this.flush().catch(() => {})
  }

  async flush(): Promise<void> {
    if (this.flushing) return
    this.flushing = true
    const sleep = this.opts.sleep ?? ((ms: number) => new Promise((r) => setTimeout(r, ms)))
    const maxRetries = this.opts.maxRetries ?? 5
    try {
      while (this.queue.length > 0) {
        const head = this.queue[0]
        let attempt = 0
        for (;;) {
          try {
            await this.api.postEvent({ session_id: this.sessionId, ...head })
            break
          } catch (err) {
            attempt += 1
            if (attempt > maxRetries) throw err
            await sleep(this.retryDelayMs * 2 ** (attempt - 1))
          }
        }
        this.queue.shift()
      }
    } finally {
      this.flushing = false
    }
  }

  /** Wait until everything enqueued so far has been acknowledged. */
  async drain(): Promise<void> {
    while (this.queue.length > 0 || this.flushing) {
      await this.flush()
      if (this.queue.length > 0 || this.flushing) {
        await new Promise((r) => setTimeout(r, 10))
      }
    }
  }
}
