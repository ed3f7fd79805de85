// Admin dashboard: topics table with parallel launch/delete, thread list with
// per-thread review, worker actions (qualifications, bonuses). Every control
// maps to exactly one API call; per-item outcomes render from the report.

import { ApiClient, ApiError } from './api.js'
import type { BatchResult, Bootstrap, ThreadSummary, TopicRow } from './types.js'

export class AdminDashboard {
  readonly root: HTMLElement
  readonly topicsTable: HTMLTableSectionElement
  readonly threadsTable: HTMLTableSectionElement
  readonly report: HTMLElement
  readonly countInput: HTMLInputElement
  readonly maxPerWorkerInput: HTMLInputElement
  readonly botParamsInput: HTMLTextAreaElement
  readonly stateFilter: HTMLSelectElement
  private selectedTopics = new Set<string>()
  private selectedThreads = new Set<string>()
  private bonusKeys = new Map<string, string>()

  constructor(root: HTMLElement, private api: ApiClient, private prefix: string,
              private doc: Document) {
    this.root = root
    root.innerHTML = ''
    root.className = 'admin-dashboard'

    const launchPane = doc.createElement('section')
    launchPane.className = 'launch-pane'
    launchPane.appendChild(this.heading('Parallel management'))
    this.countInput = this.labeledInput(launchPane, 'Tasks per topic', '1')
    this.maxPerWorkerInput = this.labeledInput(launchPane, 'Max tasks per evaluator', '')
    this.botParamsInput = doc.createElement('textarea')
    this.botParamsInput.placeholder = '{"persona": "socratic"}'
    this.botParamsInput.rows = 2
    const botParamsLabel = doc.createElement('label')
    botParamsLabel.textContent = 'Bot parameters (JSON)'
    botParamsLabel.appendChild(this.botParamsInput)
    launchPane.appendChild(botParamsLabel)
    launchPane.appendChild(this.actionButton('Launch selected topics', () => this.launchSelected()))
    launchPane.appendChild(this.actionButton('Delete selected threads', () => this.deleteSelected()))
    this.report = doc.createElement('div')
    this.report.className = 'batch-report'
    launchPane.appendChild(this.report)

    const topicsPane = doc.createElement('section')
    topicsPane.className = 'topics-pane'
    topicsPane.appendChild(this.heading('Topics'))
    const topicsTable = doc.createElement('table')
    topicsTable.innerHTML =
      '<thead><tr><th></th><th>Name</th><th>Tasks created</th><th>Last created</th></tr></thead>'
    this.topicsTable = doc.createElement('tbody')
    topicsTable.appendChild(this.topicsTable)
    topicsPane.appendChild(topicsTable)

    const threadsPane = doc.createElement('section')
    threadsPane.className = 'threads-pane'
    threadsPane.appendChild(this.heading('Threads'))
    this.stateFilter = doc.createElement('select')
    for (const option of ['', 'WaitingForHumans', 'Active', 'RatingOpen', 'Completed', 'Deleted']) {
      const element = doc.createElement('option')
      element.value = option
      element.textContent = option || 'any state'
      this.stateFilter.appendChild(element)
    }
    this.stateFilter.addEventListener('change', () => void this.refreshThreads())
    threadsPane.appendChild(this.stateFilter)
    const threadsTable = doc.createElement('table')
    threadsTable.innerHTML =
      '<thead><tr><th></th><th>Thread</th><th>Topic</th><th>State</th>'
      + '<th>Messages</th><th>Review</th><th>Export</th></tr></thead>'
    this.threadsTable = doc.createElement('tbody')
    threadsTable.appendChild(this.threadsTable)
    threadsPane.appendChild(threadsTable)

    const workerPane = this.buildWorkerPane(doc)
    root.append(launchPane, topicsPane, threadsPane, workerPane)
  }

  private heading(text: string): HTMLElement {
    const h = this.doc.createElement('h2')
    h.textContent = text
    return h
  }

  private labeledInput(parent: HTMLElement, text: string, value: string): HTMLInputElement {
    const label = this.doc.createElement('label')
    label.textContent = text
    const input = this.doc.createElement('input')
    input.value = value
    label.appendChild(input)
    parent.appendChild(label)
    return input
  }

  private actionButton(text: string, handler: () => void): HTMLButtonElement {
    const button = this.doc.createElement('button')
    button.type = 'button'
    button.textContent = text
    button.addEventListener('click', handler)
    return button
  }

  async refresh(): Promise<void> {
    await Promise.all([this.refreshTopics(), this.refreshThreads()])
  }

  async refreshTopics(): Promise<void> {
    const { topics } = await this.api.adminTopics()
    this.renderTopics(topics)
  }

  renderTopics(topics: TopicRow[]): void {
    this.topicsTable.innerHTML = ''
    for (const topic of topics) {
      const row = this.doc.createElement('tr')
      const pick = this.doc.createElement('input')
      pick.type = 'checkbox'
      pick.className = 'topic-pick'
      pick.dataset.topicId = topic.id
      pick.checked = this.selectedTopics.has(topic.id)
      pick.addEventListener('change', () => {
        if (pick.checked) this.selectedTopics.add(topic.id)
        else this.selectedTopics.delete(topic.id)
      })
      row.appendChild(this.cell(pick))
      row.appendChild(this.textCell(topic.name))
      row.appendChild(this.textCell(String(topic.threads_created)))
      row.appendChild(this.textCell(topic.last_created_at ?? 'never'))
      this.topicsTable.appendChild(row)
    }
  }

  async refreshThreads(): Promise<void> {
    const filter = this.stateFilter.value ? { state: this.stateFilter.value } : {}
    const { threads } = await this.api.adminThreads(filter)
    this.renderThreads(threads)
  }

  renderThreads(threads: ThreadSummary[]): void {
    this.threadsTable.innerHTML = ''
    for (const thread of threads) {
      const row = this.doc.createElement('tr')
      const pick = this.doc.createElement('input')
      pick.type = 'checkbox'
      pick.className = 'thread-pick'
      pick.dataset.threadId = thread.id
      pick.addEventListener('change', () => {
        if (pick.checked) this.selectedThreads.add(thread.id)
        else this.selectedThreads.delete(thread.id)
      })
      row.appendChild(this.cell(pick))
      row.appendChild(this.textCell(thread.id))
      row.appendChild(this.textCell(thread.topic_id))
      row.appendChild(this.textCell(thread.state))
      row.appendChild(this.textCell(String(thread.message_count)))
      const review = this.doc.createElement('a')
      review.href = `${this.prefix}/threads/${thread.id}`
      review.textContent = 'review'
      row.appendChild(this.cell(review))
      const exportLink = this.doc.createElement('a')
      exportLink.href = `${this.prefix}/api/admin/threads/${thread.id}/export`
      exportLink.textContent = 'export'
      exportLink.setAttribute('download', `thread-${thread.id}.json`)
      row.appendChild(this.cell(exportLink))
      this.threadsTable.appendChild(row)
    }
  }

  private cell(child: HTMLElement): HTMLTableCellElement {
    const cell = this.doc.createElement('td')
    cell.appendChild(child)
    return cell
  }

  private textCell(text: string): HTMLTableCellElement {
    const cell = this.doc.createElement('td')
    cell.textContent = text
    return cell
  }

  async launchSelected(): Promise<void> {
    let botParams: Record<string, string> = {}
    const raw = this.botParamsInput.value.trim()
    if (raw) {
      try {
        botParams = JSON.parse(raw)
      } catch {
        this.renderReport([{ id: '(bot params)', ok: false,
                             error: { code: 'bad_json', message: 'bot parameters must be JSON' } }])
        return
      }
    }
    const params: { count: number; bot_params: Record<string, string>; max_per_worker?: number } = {
      count: Number(this.countInput.value) || 1,
      bot_params: botParams,
    }
    const maxPerWorker = Number(this.maxPerWorkerInput.value)
    if (maxPerWorker > 0) params.max_per_worker = maxPerWorker
    const { results } = await this.api.adminBatch('launch', [...this.selectedTopics], params)
    this.renderReport(results)
    await this.refresh()
  }

  async deleteSelected(): Promise<void> {
    const { results } = await this.api.adminBatch('delete', [...this.selectedThreads])
    this.selectedThreads.clear()
    this.renderReport(results)
    await this.refresh()
  }

  renderReport(results: BatchResult[]): void {
    this.report.innerHTML = ''
    for (const result of results) {
      const line = this.doc.createElement('div')
      line.className = result.ok ? 'report-ok' : 'report-error'
      if (result.ok) {
        const detail = result.thread_ids ? ` -> ${result.thread_ids.join(', ')}` : ''
        line.textContent = `${result.id}: ok${detail}`
      } else {
        line.textContent = `${result.id}: ${result.error?.message ?? 'failed'}`
      }
      this.report.appendChild(line)
    }
  }

  // -- worker actions ---------------------------------------------------------

  private workerId!: HTMLInputElement
  private qualificationName!: HTMLInputElement
  private bonusAssignment!: HTMLInputElement
  private bonusAmount!: HTMLInputElement
  private bonusReason!: HTMLInputElement
  readonly workerOutcome: HTMLElement = undefined as unknown as HTMLElement

  private buildWorkerPane(doc: Document): HTMLElement {
    const pane = doc.createElement('section')
    pane.className = 'worker-pane'
    pane.appendChild(this.heading('Worker actions'))
    this.workerId = this.labeledInput(pane, 'Worker id', '')
    this.qualificationName = this.labeledInput(pane, 'Qualification', '')
    pane.appendChild(this.actionButton('Assign qualification', () => void this.assignQualification()))
    pane.appendChild(this.actionButton('Revoke qualification', () => void this.revokeQualification()))
    this.bonusAssignment = this.labeledInput(pane, 'Assignment id', '')
    this.bonusAmount = this.labeledInput(pane, 'Bonus amount', '0.50')
    this.bonusReason = this.labeledInput(pane, 'Bonus reason', '')
    pane.appendChild(this.actionButton('Grant bonus', () => void this.grantBonus()))
    const outcome = doc.createElement('div')
    outcome.className = 'worker-outcome'
    pane.appendChild(outcome)
    ;(this as { workerOutcome: HTMLElement }).workerOutcome = outcome
    return pane
  }

  async assignQualification(): Promise<void> {
    await this.workerCall(async () => {
      const result = await this.api.assignQualification(
        this.workerId.value, this.qualificationName.value)
      return `qualifications: [${result.qualifications.join(', ')}]`
    })
  }

  async revokeQualification(): Promise<void> {
    await this.workerCall(async () => {
      const result = await this.api.revokeQualification(
        this.workerId.value, this.qualificationName.value)
      return `qualifications: [${result.qualifications.join(', ')}]`
    })
  }

  /**
   * Bonus idempotency: the key derives from the assignment and reason, and is
   * cached per form content, so a double-click (or a retry after a flaky
   * response) can never pay twice.
   */
  bonusKeyFor(assignmentId: string, reason: string): string {
    const handle = `${assignmentId}:${reason}`
    let key = this.bonusKeys.get(handle)
    if (!key) {
      key = `bonus:${handle}`
      this.bonusKeys.set(handle, key)
    }
    return key
  }

  async grantBonus(): Promise<void> {
    const assignmentId = this.bonusAssignment.value
    const reason = this.bonusReason.value
    const key = this.bonusKeyFor(assignmentId, reason)
    await this.workerCall(async () => {
      const result = await this.api.grantBonus(
        this.workerId.value, assignmentId, this.bonusAmount.value, reason, key)
      return `bonus recorded (ledger #${result.acknowledgment.seq})`
    })
  }

  private async workerCall(action: () => Promise<string>): Promise<void> {
    try {
      this.workerOutcome.textContent = await action()
      this.workerOutcome.className = 'worker-outcome ok'
    } catch (error) {
      this.workerOutcome.textContent =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error)
      this.workerOutcome.className = 'worker-outcome error'
    }
  }
}

declare global {
  interface Window {
    CHATBENCH?: Bootstrap
  }
}

if (typeof window !== 'undefined' && window.CHATBENCH && !window.CHATBENCH.threadId) {
  const boot = window.CHATBENCH
  const dashboard = new AdminDashboard(
    document.getElementById('app')!, new ApiClient(boot.pathPrefix), boot.pathPrefix, document)
  void dashboard.refresh()
}
