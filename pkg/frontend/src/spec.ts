import type { SpecInput } from './types'

/** Client-side generation-spec validation.
 *  Mirrors the server rules exactly (never weaker): K >= 1 and
 *  0 < min <= target <= max. Returns human-readable problems; an empty
 *  array means the spec may be submitted. */
export function validateSpec(spec: SpecInput): string[] {
  const problems: string[] = []
  if (!Number.isInteger(spec.reel_count) || spec.reel_count < 1) {
    problems.push('Number of reels must be a whole number of at least 1.')
  }
  const target = spec.target_s ?? Math.floor((spec.min_s + spec.max_s) / 2)
  if (!Number.isInteger(spec.min_s) || spec.min_s <= 0) {
    problems.push('Minimum duration must be a positive whole number of seconds.')
  }
  if (!Number.isInteger(spec.max_s) || spec.max_s <= 0) {
    problems.push('Maximum duration must be a positive whole number of seconds.')
  }
  if (problems.length === 0) {
    if (spec.min_s > target) {
      problems.push('Minimum duration cannot exceed the target duration.')
    }
    if (target > spec.max_s) {
      problems.push('Target duration cannot exceed the maximum duration.')
    }
    if (spec.min_s > spec.max_s) {
      problems.push('Minimum duration cannot exceed the maximum duration.')
    }
  }
  return problems
}

export function withDefaultTarget(spec: SpecInput): Required<SpecInput> {
  return {
    ...spec,
    target_s: spec.target_s ?? Math.floor((spec.min_s + spec.max_s) / 2),
  }
}
