import { ApiClient, type FetchLike } from '../src/api'

export interface RecordedRequest {
  method: string
  path: string
  body: unknown
}

export interface MockRoute {
  /** return a [status, body] pair for a matched request */
  handle: (req: RecordedRequest) => [number, unknown] | undefined
}

/** In-memory transport: records every request and answers from the routes. */
export function mockTransport(routes: MockRoute[]) {
  const requests: RecordedRequest[] = []
  const fetchFn: FetchLike = async (input, init) => {
    const req: RecordedRequest = {
      method: init?.method ?? 'GET',
      path: input,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    }
    requests.push(req)
    for (const route of routes) {
      const result = route.handle(req)
      if (result) {
        const [status, body] = result
        return new Response(JSON.stringify(body), {
          status,
          headers: { 'Content-Type': 'application/json' },
        })
      }
    }
    return new Response(JSON.stringify({ error: 'not_found', detail: 'no route' }), {
      status: 404,
    })
  }
  return { requests, fetchFn }
}

export function clientWith(routes: MockRoute[]) {
  const { requests, fetchFn } = mockTransport(routes)
  return { api: new ApiClient('', 'test-token', fetchFn), requests }
}

export function reelFixture(order: number) {
  return {
    reel_id: `reel_${order}`,
    job_id: 'job_1',
    order,
    start_ms: order * 100000,
    end_ms: order * 100000 + 45000,
    label: `Label ${order}`,
    summary: `Summary ${order}`,
    published: true,
    artifact: null,
    media_url: null,
  }
}
