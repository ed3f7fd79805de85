// Thin typed client over the JSON API. Every dashboard action maps to
// exactly one method here, and every method issues exactly one request.

import type { Answers, BatchResult, ThreadSummary, TopicRow, UpdateDelta } from './types.js'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details?: Record<string, unknown>,
  ) {
    super(message)
  }
}

async function decodeError(response: Response): Promise<ApiError> {
  let code = 'http_error'
  let message = `HTTP ${response.status}`
  let details: Record<string, unknown> | undefined
  try {
    const body = await response.json()
    if (body && body.error) {
      code = body.error.code ?? code
      message = body.error.message ?? message
      details = body.error.details
    }
  } catch {
    // non-JSON error body; keep the status message
  }
  return new ApiError(response.status, code, message, details)
}

export class ApiClient {
  constructor(
    private prefix: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, credentials: 'same-origin' }
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' }
      init.body = JSON.stringify(body)
    }
    const response = await this.fetchImpl(this.prefix + path, init)
    if (!response.ok) throw await decodeError(response)
    return (await response.json()) as T
  }

  // -- session ------------------------------------------------------------

  signup(userId: string, secret: string) {
    return this.request<{ user_id: string; consent_required: boolean }>(
      'POST', '/api/signup', { user_id: userId, secret })
  }

  login(userId: string, secret: string) {
    return this.request<{ user_id: string; role: string; consent_required: boolean }>(
      'POST', '/api/login', { user_id: userId, secret })
  }

  consent(checked: boolean[]) {
    return this.request<{ consent_ok: boolean }>('POST', '/api/consent', { checked })
  }

  session() {
    return this.request<{ user_id: string; role: string; consent_ok: boolean }>(
      'GET', '/api/session')
  }

  // -- evaluator ------------------------------------------------------------

  updates(threadId: string, since: number, wait: boolean): Promise<UpdateDelta> {
    const flag = wait ? '&wait=1' : ''
    return this.request<UpdateDelta>(
      'GET', `/api/threads/${threadId}/updates?since=${since}${flag}`)
  }

  postMessage(threadId: string, text: string) {
    return this.request<{ message: { seq: number }; state: string }>(
      'POST', `/api/threads/${threadId}/messages`, { text })
  }

  submitRatings(threadId: string, answers: Answers) {
    return this.request<{
      state: string
      assignment?: { assignment_id: string | null; hit_id: string | null }
    }>('POST', `/api/threads/${threadId}/ratings`, { answers })
  }

  // -- admin ----------------------------------------------------------------

  adminTopics() {
    return this.request<{ topics: TopicRow[] }>('GET', '/api/admin/topics')
  }

  adminThreads(filter: { state?: string; topic_id?: string } = {}) {
    const params = new URLSearchParams()
    if (filter.state) params.set('state', filter.state)
    if (filter.topic_id) params.set('topic_id', filter.topic_id)
    const query = params.toString()
    return this.request<{ threads: ThreadSummary[] }>(
      'GET', `/api/admin/threads${query ? '?' + query : ''}`)
  }

  adminBatch(
    action: 'launch' | 'delete',
    ids: string[],
    params: { count?: number; bot_params?: Record<string, string>; max_per_worker?: number } = {},
  ) {
    return this.request<{ action: string; results: BatchResult[] }>(
      'POST', '/api/admin/batch', { action, ids, params })
  }

  async exportThread(threadId: string): Promise<string> {
    const response = await this.fetchImpl(
      `${this.prefix}/api/admin/threads/${threadId}/export`,
      { credentials: 'same-origin' })
    if (!response.ok) throw await decodeError(response)
    return response.text()
  }

  assignQualification(workerId: string, name: string) {
    return this.request<{ worker_id: string; qualifications: string[] }>(
      'POST', `/api/admin/workers/${workerId}/qualifications`, { name })
  }

  revokeQualification(workerId: string, name: string) {
    return this.request<{ worker_id: string; qualifications: string[] }>(
      'DELETE', `/api/admin/workers/${workerId}/qualifications?name=${encodeURIComponent(name)}`)
  }

  grantBonus(workerId: string, assignmentId: string, amount: string, reason: string,
             idempotencyKey: string) {
    return this.request<{ acknowledgment: { seq: number; idempotency_key: string } }>(
      'POST', `/api/admin/workers/${workerId}/bonus`,
      { assignment_id: assignmentId, amount, reason, idempotency_key: idempotencyKey })
  }
}
