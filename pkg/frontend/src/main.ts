import { ApiClient } from './api'
import { SegmentEditor } from './editor'
import { EventQueue } from './events'
import { JobWatcher } from './jobs'
import { ReelPlayer, QuizController } from './player'
import { validateSpec, withDefaultTarget } from './spec'
import type { AssignmentView, Job, Reel, Role } from './types'

const app = document.getElementById('app') as HTMLDivElement

let api: ApiClient
let role: Role

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text) node.textContent = text
  return node
}

function loginView(): void {
  app.innerHTML = `
    <section class="panel">
      <h1>reeled</h1>
      <label>Access token <input id="token" type="password"></label>
      <label>Role
        <select id="role">
          <option value="instructor">instructor</option>
          <option value="student">student</option>
        </select>
      </label>
      <button id="enter">Enter</button>
    </section>`
  document.getElementById('enter')!.addEventListener('click', () => {
    const token = (document.getElementById('token') as HTMLInputElement).value.trim()
    role = (document.getElementById('role') as HTMLSelectElement).value as Role
    if (!token) return
    api = new ApiClient('', token)
    if (role === 'instructor') instructorView()
    else studentEntryView()
  })
}

// --- instructor -------------------------------------------------------------

function instructorView(): void {
  if (role !== 'instructor') return loginView()
  app.innerHTML = `
    <section class="panel">
      <h2>Generate reels</h2>
      <label>Captions path <input id="captions" placeholder="/data/lecture.vtt"></label>
      <label>Source video path (optional) <input id="source"></label>
      <label>Reels <input id="k" type="number" value="5"></label>
      <label>Min seconds <input id="min" type="number" value="30"></label>
      <label>Max seconds <input id="max" type="number" value="60"></label>
      <div id="spec-errors" class="errors"></div>
      <button id="start">Generate</button>
    </section>
    <section class="panel"><h2>Jobs</h2><div id="jobs"></div></section>
    <section class="panel"><h2>Reel gallery</h2><div id="gallery" class="grid"></div></section>`
  document.getElementById('start')!.addEventListener('click', () => void startJob())
}

async function startJob(): Promise<void> {
  const input = (id: string) => (document.getElementById(id) as HTMLInputElement).value
  const spec = {
    reel_count: Number(input('k')),
    min_s: Number(input('min')),
    max_s: Number(input('max')),
  }
  const errorsBox = document.getElementById('spec-errors')!
  const problems = validateSpec(spec)
  errorsBox.textContent = problems.join(' ')
  if (problems.length > 0) return // invalid specs never reach the server

  const job = await api.createJob(input('captions'), withDefaultTarget(spec),
    input('source') || undefined)
  const card = el('div', 'job-card')
  document.getElementById('jobs')!.prepend(card)
  const watcher = new JobWatcher(api, job.job_id, ({ job: j, label }) => {
    renderJobCard(card, j, label)
  })
  const finished = await watcher.run()
  if (finished.status === 'complete') await renderGallery(finished.job_id)
}

function renderJobCard(card: HTMLElement, job: Job, label: string): void {
  card.innerHTML = ''
  card.append(el('strong', '', job.job_id))
  const badge = el('span', `badge ${job.status === 'failed' ? 'badge-failed' : ''}`,
    job.status === 'failed' ? `failed: ${job.failure?.stage ?? '?'}` : label)
  card.append(badge)
  const bar = el('div', 'bar')
  const fill = el('div', 'bar-fill')
  fill.style.width = `${job.progress_pct}%`
  bar.append(fill)
  card.append(bar)
  if (job.failure) card.append(el('p', 'errors', job.failure.message))
}

async function renderGallery(jobId: string): Promise<void> {
  const editor = new SegmentEditor(api, jobId)
  const reels = await editor.load()
  const gallery = document.getElementById('gallery')!
  gallery.innerHTML = ''
  for (const reel of reels) {
    gallery.append(reelCard(editor, reel))
  }
  const assign = el('div', 'panel-inline')
  assign.innerHTML = `
    <h3>Assign</h3>
    <label>Student id <input id="student"></label>
    <label>Quiz id <input id="quiz" value="quiz1"></label>
    <button id="assign">Assign reels</button>
    <p id="assign-out"></p>`
  gallery.append(assign)
  assign.querySelector('#assign')!.addEventListener('click', () => {
    void (async () => {
      const student = (assign.querySelector('#student') as HTMLInputElement).value
      const quiz = (assign.querySelector('#quiz') as HTMLInputElement).value
      const assignment = await api.createAssignment({
        reel_set_id: jobId, student_id: student, quiz_id: quiz, condition: 'reels',
      })
      const out = assign.querySelector('#assign-out') as HTMLElement
      out.textContent =
        `assignment ${assignment.assignment_id} — student link: ` +
        `${location.origin}/#assignment=${assignment.assignment_id}`
    })()
  })
}

function reelCard(editor: SegmentEditor, reel: Reel): HTMLElement {
  const card = el('div', 'reel-card')
  card.dataset.order = String(reel.order)
  const render = (current: Reel, error = '', retrimming = false) => {
    card.innerHTML = `
      <h4>${current.order + 1}. ${current.label}</h4>
      <p>${current.summary}</p>
      ${current.media_url ? `<video src="${current.media_url}" controls></video>` : ''}
      <label>Start ms <input class="start" type="number" value="${current.start_ms}"></label>
      <label>End ms <input class="end" type="number" value="${current.end_ms}"></label>
      <button class="save">Save bounds</button>
      ${retrimming ? '<span class="badge">re-trimming</span>' : ''}
      <p class="errors">${error}</p>`
    card.querySelector('.save')!.addEventListener('click', () => {
      void (async () => {
        const start = Number((card.querySelector('.start') as HTMLInputElement).value)
        const end = Number((card.querySelector('.end') as HTMLInputElement).value)
        const outcome = await editor.applyEdit(current.reel_id, start, end)
        for (const other of document.querySelectorAll<HTMLElement>('.reel-card')) {
          other.classList.toggle(
            'conflict',
            !outcome.ok && outcome.affectedOrders.includes(Number(other.dataset.order)))
        }
        if (outcome.ok && outcome.reel) render(outcome.reel, '', outcome.retrimming)
        else render(current, outcome.error ?? 'edit failed')
      })()
    })
  }
  render(reel)
  return card
}

// --- student ------------------------------------------------------------------

function studentEntryView(): void {
  if (role !== 'student') return loginView()
  const fromHash = location.hash.match(/assignment=([\w-]+)/)?.[1] ?? ''
  app.innerHTML = `
    <section class="panel">
      <h2>Your assignment</h2>
      <label>Assignment id <input id="assignment" value="${fromHash}"></label>
      <button id="open">Open</button>
    </section>`
  document.getElementById('open')!.addEventListener('click', () => {
    const id = (document.getElementById('assignment') as HTMLInputElement).value.trim()
    if (id) void studentPlayerView(id)
  })
}

async function studentPlayerView(assignmentId: string): Promise<void> {
  const view: AssignmentView = await api.assignmentReels(assignmentId)
  if (!view.session_id) throw new Error('no session issued')
  const events = new EventQueue(api, view.session_id)
  const player = new ReelPlayer(api, events, view.reels)
  const quiz = new QuizController(api, events, assignmentId,
    view.assignment.quiz_id, view.session_id)

  app.innerHTML = `
    <section class="panel player">
      <div id="stage"></div>
      <div class="controls">
        <button id="prev">&#8592; previous</button>
        <button id="next">next &#8594;</button>
        <span id="counter"></span>
      </div>
      <div class="rating" id="rating"></div>
      <div class="strip" id="strip"></div>
      <button id="to-quiz">Take the quiz</button>
    </section>
    <section class="panel" id="quiz-panel" hidden></section>`

  const stage = document.getElementById('stage')!
  const renderReel = () => {
    const reel = player.current
    stage.innerHTML = `
      <h3>${reel.order + 1}. ${reel.label}</h3>
      <p class="overlay">${reel.summary}</p>
      ${reel.media_url ? `<video id="video" src="${reel.media_url}" controls></video>` : ''}`
    const video = document.getElementById('video') as HTMLVideoElement | null
    video?.addEventListener('play', () => player.play())
    video?.addEventListener('pause', () => player.pause())
    video?.addEventListener('seeked', () =>
      player.seek(Math.round((video.currentTime || 0) * 1000)))
    document.getElementById('counter')!.textContent =
      `${player.currentIndex + 1} / ${player.reels.length}`
    const rating = document.getElementById('rating')!
    rating.innerHTML = 'Rate: '
    for (let v = 1; v <= 5; v += 1) {
      const b = el('button', 'star', String(v))
      b.addEventListener('click', () => void player.rate(v))
      rating.append(b)
    }
  }
  document.getElementById('prev')!.addEventListener('click', () => {
    if (player.previous()) renderReel()
  })
  document.getElementById('next')!.addEventListener('click', () => {
    if (player.next()) renderReel()
  })
  const strip = document.getElementById('strip')!
  for (const reel of view.reels) {
    const chip = el('button', 'chip', `${reel.order + 1}. ${reel.label}`)
    chip.addEventListener('click', () => {
      if (player.goTo(reel.order)) renderReel()
    })
    strip.append(chip)
  }
  renderReel()

  document.getElementById('to-quiz')!.addEventListener('click', () => {
    const panel = document.getElementById('quiz-panel')!
    panel.hidden = false
    quiz.open() // first render stamps quiz_open exactly once
    panel.innerHTML = '<h3>Comprehension quiz</h3>'
    const form = el('div')
    for (let i = 1; i <= 6; i += 1) {
      const label = el('label', '', `Question ${i} answer `)
      const input = el('input') as HTMLInputElement
      input.id = `answer-q${i}`
      label.append(input)
      form.append(label)
    }
    const submit = el('button', '', 'Submit quiz') as HTMLButtonElement
    form.append(submit)
    panel.append(form)
    submit.addEventListener('click', () => {
      void (async () => {
        if (!quiz.canSubmit) return
        submit.disabled = true // double-submit blocked client-side
        const answers: Record<string, string> = {}
        for (let i = 1; i <= 6; i += 1) {
          answers[`q${i}`] =
            (document.getElementById(`answer-q${i}`) as HTMLInputElement).value
        }
        const result = await quiz.submit(answers)
        panel.innerHTML =
          `<h3>Result</h3><p>Score: ${result.score_pct.toFixed(1)}%</p>`
      })()
    })
  })
}

loginView()
