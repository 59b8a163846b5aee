import { describe, expect, it } from 'vitest'

import { ApiClient, type FetchLike } from '../src/api'
import { EventQueue } from '../src/events'

function flakyTransport(failFirst: number) {
  const delivered: Array<{ kind: string; wall_time: number }> = []
  let failures = 0
  const fetchFn: FetchLike = async (_input, init) => {
    if (failures < failFirst) {
      failures += 1
      return new Response(JSON.stringify({ error: 'boom', detail: 'transient' }), {
        status: 500,
      })
    }
    delivered.push(JSON.parse(init?.body as string))
    return new Response(JSON.stringify({ session_id: 'ses', seq: delivered.length - 1 }), {
      status: 201,
    })
  }
  return { delivered, fetchFn }
}

describe('event queue', () => {
  it('delivers events strictly in order', async () => {
    const { delivered, fetchFn } = flakyTransport(0)
    const queue = new EventQueue(new ApiClient('', 't', fetchFn), 'ses')
    for (const kind of ['play', 'seek', 'pause', 'seek', 'reel_change'] as const) {
      queue.track(kind, 'reel:0')
    }
    await queue.drain()
    expect(delivered.map((e) => e.kind)).toEqual(
      ['play', 'seek', 'pause', 'seek', 'reel_change'])
  })

  it('retries with backoff without reordering', async () => {
    const sleeps: number[] = []
    const { delivered, fetchFn } = flakyTransport(3)
    const queue = new EventQueue(new ApiClient('', 't', fetchFn), 'ses', {
      baseRetryMs: 100,
      sleep: async (ms) => {
        sleeps.push(ms)
      },
    })
    queue.track('play', 'reel:0')
    queue.track('seek', 'reel:0')
    await queue.drain()
    expect(sleeps).toEqual([100, 200, 400]) // exponential backoff
    expect(delivered.map((e) => e.kind)).toEqual(['play', 'seek'])
  })

  it('gives up after max retries and keeps the event queued', async () => {
    const { fetchFn } = flakyTransport(Number.POSITIVE_INFINITY)
    const queue = new EventQueue(new ApiClient('', 't', fetchFn), 'ses', {
      maxRetries: 2,
      sleep: async () => {},
    })
    queue.track('play', 'reel:0') // background flush fails silently
    await new Promise((r) => setTimeout(r, 20))
    expect(queue.pending).toBe(1)
    await expect(queue.flush()).rejects.toThrow()
    expect(queue.pending).toBe(1) // still queued for a later flush
  })

  it('wall clock comes from the injected clock', async () => {
    const { delivered, fetchFn } = flakyTransport(0)
    let wall = 41
    const queue = new EventQueue(new ApiClient('', 't', fetchFn), 'ses', {
      now: () => (wall += 1),
    })
    queue.track('play', 'reel:0')
    queue.track('pause', 'reel:0')
    await queue.drain()
    expect(delivered.map((e) => e.wall_time)).toEqual([42, 43])
  })
})
