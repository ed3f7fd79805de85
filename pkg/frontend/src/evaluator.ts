// Entry module for the thread page (evaluators, and admins in review mode).

import { ApiClient, ApiError } from './api.js'
import { PollLoop } from './poll.js'
import { ThreadView } from './thread_view.js'
import type { Bootstrap } from './types.js'

export interface MountedThread {
  view: ThreadView
  loop: PollLoop
}

export function mountThreadPage(boot: Bootstrap, doc: Document, api: ApiClient,
                                allowChatAfterDone = false): MountedThread {
  const root = doc.getElementById('app')!
  const threadId = boot.threadId!
  const readOnly = boot.role === 'admin'

  const view = new ThreadView(root, boot.renderModel ?? [], {
    readOnly,
    allowChatAfterDone,
    instruction: boot.instruction ?? { title: boot.taskName, description: '' },
    onSend: async text => {
      try {
        await api.postMessage(threadId, text)
      } catch (error) {
        view.banner.hidden = false
        view.banner.textContent = error instanceof ApiError ? error.message : String(error)
      }
    },
    onSubmitSurvey: async answers => {
      try {
        const result = await api.submitRatings(threadId, answers)
        view.showCompletion(doc, result.assignment)
      } catch (error) {
        if (error instanceof ApiError && error.code === 'validation_failed') {
          // Server verdict: highlight exactly the offending questions.
          const report = (error.details?.report ?? []) as { question_id: string }[]
          view.survey.highlight(report.map(problem => problem.question_id))
          view.surveyError.textContent = error.message
        } else {
          view.surveyError.textContent = error instanceof ApiError ? error.message : String(error)
        }
      }
    },
    onOpenInstructions: async () => {
      const modal = doc.createElement('dialog')
      modal.className = 'instructions-modal'
      const response = await fetch(`${boot.pathPrefix}/agreement`)
      modal.innerHTML = await response.text()
      const close = doc.createElement('button')
      close.textContent = 'Close'
      close.addEventListener('click', () => modal.remove())
      modal.appendChild(close)
      doc.body.appendChild(modal)
      if (typeof (modal as HTMLDialogElement).showModal === 'function') {
        ;(modal as HTMLDialogElement).showModal()
      }
    },
  }, doc)

  const loop = new PollLoop(api, threadId, {
    onAppend: messages => view.appendMessages(messages, doc),
    onDelta: delta => view.applyDelta(delta),
    onTransportError: () => {
      view.banner.hidden = false
      view.banner.textContent = 'Connection hiccup; retrying...'
    },
    onAuthLost: () => {
      doc.defaultView!.location.href = `${boot.pathPrefix}/`
    },
  })
  return { view, loop }
}

declare global {
  interface Window {
    CHATBENCH?: Bootstrap
  }
}

async function bootLive(boot: Bootstrap): Promise<void> {
  const api = new ApiClient(boot.pathPrefix)
  let allowAfter = false
  try {
    const response = await fetch(`${boot.pathPrefix}/api/threads/${boot.threadId}`,
                                 { credentials: 'same-origin' })
    if (response.ok) {
      allowAfter = Boolean((await response.json()).allow_chat_after_done)
    }
  } catch {
    // fall back to the strict rule
  }
  const { loop } = mountThreadPage(boot, document, api, allowAfter)
  await loop.prime()
  void loop.start()
}

if (typeof window !== 'undefined' && window.CHATBENCH?.threadId) {
  void bootLive(window.CHATBENCH)
}
