import { ApiClient, ApiRequestError } from './api'
import type { Reel } from './types'

export interface EditOutcome {
  ok: boolean
  reel?: Reel
  retrimming?: boolean
  error?: string
  /** reel orders to highlight when the server rejects the edit */
  affectedOrders: number[]
}

const ORDER_IN_DETAIL = /reel (\d+)/

/** Instructor segment editor state: issues PATCH requests and turns the
 *  server's typed errors into renderable card state (the offending sibling
 *  is highlighted on overlap). */
export class SegmentEditor {
  reels: Reel[] = []

  constructor(private readonly api: ApiClient, private readonly jobId: string) {}

  async load(): Promise<Reel[]> {
    this.reels = await this.api.reelsForJob(this.jobId)
    return this.reels
  }

  async applyEdit(reelId: string, startMs: number, endMs: number): Promise<EditOutcome> {
    const edited = this.reels.find((r) => r.reel_id === reelId)
    if (!edited) {
      return { ok: false, error: 'unknown reel', affectedOrders: [] }
    }
    if (startMs >= endMs || startMs < 0) {
      return {
        ok: false,
        error: 'Start must lie before end.',
        affectedOrders: [edited.order],
      }
    }
    try {
      const updated = await this.api.patchReel(reelId, {
        start_ms: startMs,
        end_ms: endMs,
      })
      this.reels = this.reels.map((r) => (r.reel_id === reelId ? updated : r))
      return {
        ok: true,
        reel: updated,
        retrimming: updated.retrimmed,
        affectedOrders: [updated.order],
      }
    } catch (err) {
      if (err instanceof ApiRequestError) {
        const affected = [edited.order]
        const match = ORDER_IN_DETAIL.exec(err.message)
        if (match) affected.push(Number(match[1]))
        return { ok: false, error: err.message, affectedOrders: affected }
      }
      throw err
    }
  }

  async publish(reelId: string, published: boolean): Promise<Reel> {
    const updated = await this.api.patchReel(reelId, { published })
    this.reels = this.reels.map((r) => (r.reel_id === reelId ? updated : r))
    return updated
  }
}
