// The evaluator's three panes: conversation, instruction, survey. The admin
// review page mounts this same view with inputs disabled.
//
// View state is a pure function of the merged delta stream: the input box is
// enabled iff it is your turn and the chat is open, the survey pane shows
// iff the survey is open, seed turns are visually distinct.

import { SurveyForm } from './survey.js'
import type { Answers, ChatMessage, SurveyQuestion, UpdateDelta } from './types.js'

export interface ThreadViewOptions {
  readOnly: boolean
  allowChatAfterDone: boolean
  instruction: { title: string; description: string }
  onSend(text: string): void
  onSubmitSurvey(answers: Answers): void
  onOpenInstructions(): void
}

export class ThreadView {
  readonly conversation: HTMLElement
  readonly input: HTMLTextAreaElement
  readonly sendButton: HTMLButtonElement
  readonly remaining: HTMLElement
  readonly banner: HTMLElement
  readonly surveyPane: HTMLElement
  readonly survey: SurveyForm
  readonly submitButton: HTMLButtonElement
  readonly surveyError: HTMLElement
  readonly status: HTMLElement

  constructor(root: HTMLElement, model: SurveyQuestion[],
              private options: ThreadViewOptions, doc: Document) {
    root.innerHTML = ''
    root.className = 'thread-view'

    const instruction = doc.createElement('section')
    instruction.className = 'instruction-pane'
    const heading = doc.createElement('h2')
    heading.textContent = options.instruction.title
    const blurb = doc.createElement('p')
    blurb.textContent = options.instruction.description
    const detail = doc.createElement('button')
    detail.type = 'button'
    detail.className = 'detailed-instructions'
    detail.textContent = 'Detailed instructions'
    detail.addEventListener('click', () => options.onOpenInstructions())
    instruction.append(heading, blurb, detail)

    const pane = doc.createElement('section')
    pane.className = 'conversation-pane'
    this.conversation = doc.createElement('div')
    this.conversation.className = 'messages'
    this.banner = doc.createElement('div')
    this.banner.className = 'error-banner'
    this.banner.hidden = true
    this.remaining = doc.createElement('div')
    this.remaining.className = 'remaining-turns'
    this.status = doc.createElement('div')
    this.status.className = 'thread-status'

    const composer = doc.createElement('div')
    composer.className = 'composer'
    this.input = doc.createElement('textarea')
    this.input.rows = 2
    this.input.disabled = true
    this.sendButton = doc.createElement('button')
    this.sendButton.type = 'button'
    this.sendButton.textContent = 'Send'
    this.sendButton.disabled = true
    this.sendButton.addEventListener('click', () => {
      const text = this.input.value.trim()
      if (!text) return
      this.input.value = ''
      options.onSend(text)
    })
    composer.append(this.input, this.sendButton)
    pane.append(this.banner, this.conversation, this.remaining, this.status, composer)

    this.surveyPane = doc.createElement('section')
    this.surveyPane.className = 'survey-pane'
    this.surveyPane.hidden = true
    this.survey = new SurveyForm(model, doc)
    this.surveyError = doc.createElement('p')
    this.surveyError.className = 'survey-error'
    this.submitButton = doc.createElement('button')
    this.submitButton.type = 'button'
    this.submitButton.textContent = 'Submit ratings'
    this.submitButton.addEventListener('click', () => {
      // Required-field gating happens client-side before any request.
      const missing = this.survey.missingRequired()
      if (missing.length) {
        this.survey.highlight(missing)
        this.surveyError.textContent = 'Please answer every required question.'
        return
      }
      this.survey.highlight([])
      this.surveyError.textContent = ''
      options.onSubmitSurvey(this.survey.read())
    })
    this.surveyPane.append(this.survey.root, this.surveyError, this.submitButton)

    root.append(instruction, pane, this.surveyPane)
  }

  appendMessages(messages: ChatMessage[], doc: Document): void {
    for (const message of messages) {
      const bubble = doc.createElement('div')
      bubble.className = `message role-${message.author_role}${message.is_seed ? ' seed' : ''}`
      bubble.dataset.seq = String(message.seq)
      const speaker = doc.createElement('span')
      speaker.className = 'speaker'
      speaker.textContent = message.is_seed
        ? `${message.speaker_label} (context)`
        : message.speaker_label
      const text = doc.createElement('span')
      text.className = 'text'
      text.textContent = message.text
      bubble.append(speaker, text)
      this.conversation.appendChild(bubble)
    }
  }

  applyDelta(delta: UpdateDelta): void {
    const chatOpen = delta.state === 'Active'
      || (this.options.allowChatAfterDone && delta.state === 'RatingOpen')
    const canType = !this.options.readOnly && delta.your_turn && chatOpen
    this.input.disabled = !canType
    this.sendButton.disabled = !canType

    this.remaining.textContent = `You have ${delta.remaining_turns} turn(s) remaining.`
    this.remaining.hidden = this.options.readOnly

    this.surveyPane.hidden = !delta.survey_open
    if (this.options.readOnly) {
      this.submitButton.disabled = true
      for (const input of this.survey.root.querySelectorAll('input, textarea')) {
        ;(input as HTMLInputElement).disabled = true
      }
    }

    this.banner.hidden = !delta.error_banner
    this.banner.textContent = delta.error_banner ?? ''

    this.status.textContent = `State: ${delta.state}`
  }

  showCompletion(doc: Document, assignment?: { assignment_id: string | null }): void {
    this.surveyPane.hidden = true
    this.input.disabled = true
    this.sendButton.disabled = true
    const done = doc.createElement('div')
    done.className = 'completion'
    done.textContent = assignment && assignment.assignment_id
      ? `All done, thank you! Your assignment ${assignment.assignment_id} was submitted.`
      : 'All done, thank you! Your ratings were recorded.'
    this.conversation.parentElement!.appendChild(done)
  }
}
