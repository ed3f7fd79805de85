// Signup / login page for external-URL deployments. Crowd workers never see
// this: their entry links auto-sign them up on the landing route.

import { ApiClient, ApiError } from './api.js'
import type { Bootstrap } from './types.js'

export function mountLanding(boot: Bootstrap, doc: Document,
                             api = new ApiClient(boot.pathPrefix)): HTMLElement {
  const root = doc.getElementById('app')!
  root.innerHTML = ''
  root.className = 'landing'

  const title = doc.createElement('h1')
  title.textContent = boot.taskName
  const error = doc.createElement('p')
  error.className = 'landing-error'

  const form = doc.createElement('form')
  form.addEventListener('submit', event => event.preventDefault())
  const user = doc.createElement('input')
  user.placeholder = 'user id'
  const secret = doc.createElement('input')
  secret.type = 'password'
  secret.placeholder = 'password'
  form.append(user, secret)

  const go = (consentRequired: boolean) => {
    const target = consentRequired
      ? `${boot.pathPrefix}/consent?return=${encodeURIComponent(boot.pathPrefix + '/landing')}`
      : `${boot.pathPrefix}/landing`
    doc.defaultView!.location.href = target
  }

  const act = (label: string, run: () => Promise<{ consent_required: boolean }>) => {
    const button = doc.createElement('button')
    button.type = 'button'
    button.textContent = label
    button.addEventListener('click', async () => {
      try {
        const result = await run()
        go(result.consent_required)
      } catch (err) {
        error.textContent = err instanceof ApiError ? err.message : String(err)
      }
    })
    form.appendChild(button)
  }

  act('Sign up', () => api.signup(user.value, secret.value))
  act('Log in', () => api.login(user.value, secret.value))

  root.append(title, form, error)
  return root
}

declare global {
  interface Window {
    CHATBENCH?: Bootstrap
  }
}

if (typeof window !== 'undefined' && window.CHATBENCH && !window.CHATBENCH.threadId) {
  mountLanding(window.CHATBENCH, document)
}
