import type { ApiClient } from './api'
import type { Job, JobStatus } from './types'

/** Coarse stage labels shown on the progress card. */
export function stageLabel(status: JobStatus): string {
  switch (status) {
    case 'queued':
      return 'queued'
    case 'downloading':
    case 'transcribing':
      return 'downloading'
    case 'llm_processing':
      return 'llm_processing'
    case 'planning':
    case 'trimming':
      return 'reel creation'
    case 'complete':
      return 'complete'
    case 'failed':
      return 'failed'
  }
}

export const TERMINAL_STATUSES: JobStatus[] = ['complete', 'failed']

export interface JobUpdate {
  job: Job
  label: string
}

/** Polls a job every pollMs (2 s by default) until it reaches a terminal
 *  state, reporting each distinct label transition in order. */
export class JobWatcher {
  readonly labelsSeen: string[] = []
  private stopped = false

  constructor(
    private readonly api: ApiClient,
    private readonly jobId: string,
    private readonly onUpdate: (update: JobUpdate) => void,
    private readonly pollMs = 2000,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((r) => setTimeout(r, ms)),
  ) {}

  stop(): void {
    this.stopped = true
  }

  async run(): Promise<Job> {
    for (;;) {
      const job = await this.api.getJob(this.jobId)
      const label = stageLabel(job.status)
      if (this.labelsSeen[this.labelsSeen.length - 1] !== label) {
        this.labelsSeen.push(label)
      }
      this.onUpdate({ job, label })
      if (this.stopped || TERMINAL_STATUSES.includes(job.status)) {
        return job
      }
      await this.sleep(this.pollMs)
    }
  }
}
