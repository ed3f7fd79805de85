// Wire types mirrored from the server's JSON API.

export interface ChatMessage {
  seq: number
  author_role: 'human' | 'bot' | 'seed'
  speaker_label: string
  text: string
  is_seed: boolean
  created_at: string
}

export type ThreadState =
  | 'Created'
  | 'WaitingForHumans'
  | 'Active'
  | 'RatingOpen'
  | 'Completed'
  | 'Deleted'

export interface UpdateDelta {
  messages: ChatMessage[]
  state: ThreadState
  remaining_turns: number
  survey_open: boolean
  your_turn: boolean
  error_banner: string | null
}

export interface SurveyQuestion {
  id: string
  kind: 'radio' | 'checkbox' | 'likert' | 'freeform'
  prompt: string
  required: boolean
  choices?: string[]
  scale?: string[]
}

export type Answers = Record<string, string | string[]>

export interface ValidationProblem {
  question_id: string
  message: string
  value?: unknown
}

export interface BatchResult {
  id: string
  ok: boolean
  error?: { code: string; message: string }
  thread_ids?: string[]
  task_handles?: { hit_id: string; entry_url: string }[]
  deleted?: string
}

export interface TopicRow {
  id: string
  name: string
  seed_turn_count: number
  threads_created: number
  last_created_at: string | null
}

export interface ThreadSummary {
  id: string
  topic_id: string
  state: ThreadState
  participant_count: number
  message_count: number
  created_at: string
}

// Injected by the server's HTML shells.
export interface Bootstrap {
  pathPrefix: string
  taskName: string
  threadId?: string
  renderModel?: SurveyQuestion[]
  role?: 'worker' | 'admin'
  instruction?: { title: string; description: string }
  needsConsent?: boolean
}
