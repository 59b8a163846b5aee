export type Role = 'instructor' | 'student' | 'researcher'

export type JobStatus =
  | 'queued'
  | 'downloading'
  | 'transcribing'
  | 'llm_processing'
  | 'planning'
  | 'trimming'
  | 'complete'
  | 'failed'

export type EventKind =
  | 'play'
  | 'pause'
  | 'seek'
  | 'reel_change'
  | 'quiz_open'
  | 'quiz_submit'
  | 'rate'

export interface SpecInput {
  reel_count: number
  min_s: number
  max_s: number
  target_s?: number
}

export interface Job {
  job_id: string
  source_uri: string | null
  captions_ref: string
  spec: SpecInput
  status: JobStatus
  progress_pct: number
  failure: { stage: string; message: string } | null
  created_at: string
  updated_at: string
}

export interface Reel {
  reel_id: string
  job_id: string
  order: number
  start_ms: number
  end_ms: number
  label: string
  summary: string
  published: boolean
  artifact: { file: string; duration_ms: number; checksum: string } | null
  media_url: string | null
}

export interface Assignment {
  assignment_id: string
  reel_set_id: string
  student_id: string
  quiz_id: string
  condition: 'long_form' | 'reels'
}

export interface AssignmentView {
  assignment: Assignment
  session_id: string | null
  reels: Reel[]
}

export interface ViewEventIn {
  session_id: string
  subject_id: string
  kind: EventKind
  at_ms: number
  wall_time: number
  value: number | null
}

export interface QuizResult {
  assignment_id: string
  score_pct: number
  duration_s: number | null
  revisits: number
}

export interface ApiError {
  error: string
  detail: string
}
