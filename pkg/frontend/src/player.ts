import type { ApiClient } from './api'
import { EventQueue } from './events'
import type { Reel } from './types'

/** Student reel player state machine.
 *
 *  Holds the reel list and current index; every user interaction emits
 *  exactly one telemetry event through the queue. Rating additionally calls
 *  the rating endpoint (the rate event carries the value for the stream). */
export class ReelPlayer {
  private index = 0
  private positionMs = 0

  constructor(
    private readonly api: ApiClient,
    private readonly events: EventQueue,
    readonly reels: Reel[],
  ) {
    if (reels.length === 0) throw new Error('no reels to play')
  }

  get current(): Reel {
    return this.reels[this.index]
  }

  get currentIndex(): number {
    return this.index
  }

  private get subject(): string {
    return `reel:${this.current.order}`
  }

  play(): void {
    this.events.track('play', this.subject, this.positionMs)
  }

  pause(): void {
    this.events.track('pause', this.subject, this.positionMs)
  }

  seek(toMs: number): void {
    this.positionMs = toMs
    this.events.track('seek', this.subject, toMs)
  }

  next(): boolean {
    if (this.index + 1 >= this.reels.length) return false
    this.index += 1
    this.positionMs = 0
    this.events.track('reel_change', this.subject)
    return true
  }

  previous(): boolean {
    if (this.index === 0) return false
    this.index -= 1
    this.positionMs = 0
    this.events.track('reel_change', this.subject)
    return true
  }

  goTo(order: number): boolean {
    const target = this.reels.findIndex((r) => r.order === order)
    if (target === -1 || target === this.index) return false
    this.index = target
    this.positionMs = 0
    this.events.track('reel_change', this.subject)
    return true
  }

  async rate(value: number): Promise<void> {
    if (value < 1 || value > 5) throw new Error('rating must be between 1 and 5')
    this.events.track('rate', this.subject, this.positionMs, value)
    await this.api.rateReel(this.current.reel_id, value)
  }
}

/** Quiz page controller: stamps quiz_open on first render, quiz_submit on
 *  submission, and blocks double submission client-side. */
export class QuizController {
  private opened = false
  private submitted = false

  constructor(
    private readonly api: ApiClient,
    private readonly events: EventQueue,
    private readonly assignmentId: string,
    private readonly quizId: string,
    private readonly sessionId: string,
  ) {}

  get canSubmit(): boolean {
    return this.opened && !this.submitted
  }

  open(): void {
    if (this.opened) return // only the first render stamps the event
    this.opened = true
    this.events.track('quiz_open', this.quizId)
  }

  async submit(answers: Record<string, string>) {
    if (!this.opened) throw new Error('quiz was never opened')
    if (this.submitted) throw new Error('quiz already submitted')
    this.submitted = true
    this.events.track('quiz_submit', this.quizId)
    await this.events.drain() // the submit must see the stamped events
    return this.api.submitQuiz(this.assignmentId, this.sessionId, answers)
  }
}
