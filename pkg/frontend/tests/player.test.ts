import { describe, expect, it } from 'vitest'

import { EventQueue } from '../src/events'
import { ReelPlayer, QuizController } from '../src/player'
import { clientWith, reelFixture, type RecordedRequest } from './helpers'

function eventRoutes() {
  return [
    {
      handle: (req: RecordedRequest): [number, unknown] | undefined => {
        if (req.path === '/api/events' && req.method === 'POST') {
          return [201, { session_id: 'ses_1', seq: 0 }]
        }
        if (req.path.endsWith('/rating')) {
          return [201, { reel_id: 'reel_0', value: 5 }]
        }
        if (req.path.endsWith('/quiz')) {
          return [200, { assignment_id: 'asg_1', score_pct: 100, duration_s: 9, revisits: 1 }]
        }
        return undefined
      },
    },
  ]
}

function postedEvents(requests: RecordedRequest[]) {
  return requests
    .filter((r) => r.path === '/api/events')
    .map((r) => r.body as { kind: string; subject_id: string; value: number | null })
}

describe('scripted student session', () => {
  it('emits exactly the expected event stream in order', async () => {
    const { api, requests } = clientWith(eventRoutes())
    let wall = 1000
    const events = new EventQueue(api, 'ses_1', { now: () => (wall += 1) })
    const reels = [0, 1, 2, 3, 4].map(reelFixture)
    const player = new ReelPlayer(api, events, reels)
    const quiz = new QuizController(api, events, 'asg_1', 'quiz_1', 'ses_1')

    player.play()
    player.seek(4000)
    player.seek(9000)
    player.next()
    player.next()
    player.next()
    player.next()
    quiz.open()
    player.seek(2500) // the one revisit: content interaction after quiz_open
    await quiz.submit({ q1: 'a' })
    await player.rate(5)
    await events.drain()

    expect(postedEvents(requests).map((e) => e.kind)).toEqual([
      'play', 'seek', 'seek',
      'reel_change', 'reel_change', 'reel_change', 'reel_change',
      'quiz_open', 'seek', 'quiz_submit', 'rate',
    ])
    const subjects = postedEvents(requests).map((e) => e.subject_id)
    expect(subjects.slice(0, 3)).toEqual(['reel:0', 'reel:0', 'reel:0'])
    expect(subjects.slice(3, 7)).toEqual(['reel:1', 'reel:2', 'reel:3', 'reel:4'])
    expect(subjects[7]).toBe('quiz_1')
    expect(subjects[8]).toBe('reel:4')

    // wall clock is strictly non-decreasing across the stream
    const walls = requests
      .filter((r) => r.path === '/api/events')
      .map((r) => (r.body as { wall_time: number }).wall_time)
    const sorted = [...walls].sort((a, b) => a - b)
    expect(walls).toEqual(sorted)
  })

  it('every interaction posts exactly one event', async () => {
    const { api, requests } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const player = new ReelPlayer(api, events, [0, 1].map(reelFixture))

    player.play()
    player.pause()
    player.seek(100)
    player.next()
    await player.rate(4)
    await events.drain()

    expect(postedEvents(requests)).toHaveLength(5)
  })

  it('rating posts both the event and the rating endpoint call', async () => {
    const { api, requests } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const player = new ReelPlayer(api, events, [0].map(reelFixture))
    await player.rate(5)
    await events.drain()
    const rateEvent = postedEvents(requests).find((e) => e.kind === 'rate')
    expect(rateEvent?.value).toBe(5)
    expect(requests.some((r) => r.path === '/api/reels/reel_0/rating')).toBe(true)
  })

  it('navigation stops at the ends without emitting events', async () => {
    const { api, requests } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const player = new ReelPlayer(api, events, [0, 1].map(reelFixture))
    expect(player.previous()).toBe(false)
    player.next()
    expect(player.next()).toBe(false)
    await events.drain()
    expect(postedEvents(requests).map((e) => e.kind)).toEqual(['reel_change'])
  })
})

describe('quiz controller', () => {
  it('stamps quiz_open only on the first render', async () => {
    const { api, requests } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const quiz = new QuizController(api, events, 'asg_1', 'quiz_1', 'ses_1')
    quiz.open()
    quiz.open()
    quiz.open()
    await events.drain()
    expect(postedEvents(requests).filter((e) => e.kind === 'quiz_open')).toHaveLength(1)
  })

  it('blocks double submission client-side', async () => {
    const { api } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const quiz = new QuizController(api, events, 'asg_1', 'quiz_1', 'ses_1')
    quiz.open()
    await quiz.submit({ q1: 'a' })
    expect(quiz.canSubmit).toBe(false)
    await expect(quiz.submit({ q1: 'a' })).rejects.toThrow(/already submitted/)
  })

  it('cannot submit before opening', async () => {
    const { api } = clientWith(eventRoutes())
    const events = new EventQueue(api, 'ses_1')
    const quiz = new QuizController(api, events, 'asg_1', 'quiz_1', 'ses_1')
    await expect(quiz.submit({})).rejects.toThrow(/never opened/)
  })
})
