// Survey form built from the server's render model: one widget per question,
// in order. The client-side required check mirrors the server's validator so
// evaluators almost never see a server-side rejection.

import type { Answers, SurveyQuestion } from './types.js'

export class SurveyForm {
  readonly root: HTMLElement

  constructor(private model: SurveyQuestion[], doc: Document) {
    this.root = doc.createElement('form')
    this.root.className = 'survey-form'
    this.root.addEventListener('submit', event => event.preventDefault())
    for (const question of model) {
      this.root.appendChild(this.buildQuestion(question, doc))
    }
  }

  private buildQuestion(question: SurveyQuestion, doc: Document): HTMLElement {
    const block = doc.createElement('fieldset')
    block.className = `question question-${question.kind}`
    block.dataset.questionId = question.id

    const legend = doc.createElement('legend')
    legend.textContent = question.required ? question.prompt : `${question.prompt} (optional)`
    block.appendChild(legend)

    if (question.kind === 'radio' || question.kind === 'likert') {
      // One exclusive row of labeled points / choices.
      const options = question.kind === 'likert' ? question.scale ?? [] : question.choices ?? []
      for (const option of options) {
        const label = doc.createElement('label')
        const input = doc.createElement('input')
        input.type = 'radio'
        input.name = question.id
        input.value = option
        label.appendChild(input)
        label.appendChild(doc.createTextNode(` ${option}`))
        block.appendChild(label)
      }
    } else if (question.kind === 'checkbox') {
      for (const option of question.choices ?? []) {
        const label = doc.createElement('label')
        const input = doc.createElement('input')
        input.type = 'checkbox'
        input.name = question.id
        input.value = option
        label.appendChild(input)
        label.appendChild(doc.createTextNode(` ${option}`))
        block.appendChild(label)
      }
    } else {
      const area = doc.createElement('textarea')
      area.name = question.id
      area.rows = 3
      block.appendChild(area)
    }
    return block
  }

  /** Current answers in the wire shape; unanswered questions are omitted. */
  read(): Answers {
    const answers: Answers = {}
    for (const question of this.model) {
      if (question.kind === 'radio' || question.kind === 'likert') {
        const picked = this.root.querySelector<HTMLInputElement>(
          `input[name="${question.id}"]:checked`)
        if (picked) answers[question.id] = picked.value
      } else if (question.kind === 'checkbox') {
        const picked = [...this.root.querySelectorAll<HTMLInputElement>(
          `input[name="${question.id}"]:checked`)].map(input => input.value)
        if (picked.length) answers[question.id] = picked
      } else {
        const area = this.root.querySelector<HTMLTextAreaElement>(
          `textarea[name="${question.id}"]`)
        const text = area ? area.value.trim() : ''
        if (text) answers[question.id] = area!.value
      }
    }
    return answers
  }

  /** Ids of required questions still unanswered (mirrors the server rule). */
  missingRequired(): string[] {
    const answers = this.read()
    return this.model
      .filter(question => question.required && !(question.id in answers))
      .map(question => question.id)
  }

  highlight(questionIds: string[]): void {
    for (const block of this.root.querySelectorAll<HTMLElement>('.question')) {
      const flagged = questionIds.includes(block.dataset.questionId ?? '')
      block.classList.toggle('invalid', flagged)
    }
  }
}
