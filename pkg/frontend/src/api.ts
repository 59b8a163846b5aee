import type {
  ApiError,
  Assignment,
  AssignmentView,
  Job,
  QuizResult,
  Reel,
  SpecInput,
  ViewEventIn,
} from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiRequestError extends Error {
  readonly status: number
  readonly code: string

  constructor(status: number, body: ApiError | null) {
    super(body?.detail ?? `HTTP ${status}`)
    this.status = status
    this.code = body?.error ?? 'http_error'
  }
}

/** Thin typed wrapper over the service endpoints; the fetch function is
 *  injectable so tests can run against a scripted transport. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private token: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string) {
    this.token = token
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: {
        'Content-Type': 'application/json',
        Authorization: `Bearer ${this.token}`,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    })
    if (!resp.ok) {
      let parsed: ApiError | null = null
      try {
        parsed = (await resp.json()) as ApiError
      } catch {
        parsed = null
      }
      throw new ApiRequestError(resp.status, parsed)
    }
    return (await resp.json()) as T
  }

  createJob(captionsRef: string, spec: SpecInput, sourceUri?: string): Promise<Job> {
    return this.request('POST', '/api/jobs', {
      captions_ref: captionsRef,
      source_uri: sourceUri ?? null,
      spec,
    })
  }

  getJob(jobId: string): Promise<Job> {
    return this.request('GET', `/api/jobs/${jobId}`)
  }

  reelsForJob(jobId: string): Promise<Reel[]> {
    return this.request('GET', `/api/reels?job=${encodeURIComponent(jobId)}`)
  }

  patchReel(
    reelId: string,
    patch: { start_ms?: number; end_ms?: number; published?: boolean },
  ): Promise<Reel & { retrimmed: boolean }> {
    return this.request('PATCH', `/api/reels/${reelId}`, patch)
  }

  createAssignment(body: {
    reel_set_id: string
    student_id: string
    quiz_id: string
    condition: 'long_form' | 'reels'
    quiz_key?: Record<string, string>
  }): Promise<Assignment> {
    return this.request('POST', '/api/assignments', body)
  }

  assignmentReels(assignmentId: string): Promise<AssignmentView> {
    return this.request('GET', `/api/assignments/${assignmentId}/reels`)
  }

  postEvent(event: ViewEventIn): Promise<{ session_id: string; seq: number }> {
    return this.request('POST', '/api/events', event)
  }

  submitQuiz(
    assignmentId: string,
    sessionId: string | null,
    answers: Record<string, string>,
  ): Promise<QuizResult> {
    return this.request('POST', `/api/assignments/${assignmentId}/quiz`, {
      session_id: sessionId,
      answers,
    })
  }

  rateReel(reelId: string, value: number): Promise<{ reel_id: string; value: number }> {
    return this.request('POST', `/api/reels/${reelId}/rating`, { value })
  }
}
