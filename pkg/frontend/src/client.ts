// Thin HTTP + server-sent-events client for the qbench session service.

import type { SceneInfo, ServerEvent, SessionState } from "./types";

export class ApiClient {
  constructor(readonly base: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const err = await resp.json();
        detail = err?.error?.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new Error(`${method} ${path}: ${detail}`);
    }
    if (resp.status === 204) {
      return undefined as T;
    }
    return (await resp.json()) as T;
  }

  listScenes(): Promise<{ scenes: SceneInfo[] }> {
    return this.request("GET", "/scenes");
  }

  createSession(scene: string, seed?: number): Promise<{ id: string; seed: number }> {
    return this.request("POST", "/sessions", { scene, seed });
  }

  getState(id: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${id}`);
  }

  deleteSession(id: string): Promise<void> {
    return this.request("DELETE", `/sessions/${id}`);
  }

  setParam(
    id: string,
    component: string,
    param: string,
    value: unknown,
    interactive = true,
  ): Promise<SessionState> {
    return this.request("PATCH", `/sessions/${id}/components/${component}`, {
      param,
      value,
      interactive,
    });
  }

  fire(id: string, shots: number): Promise<{ accepted: number; seq: number }> {
    return this.request("POST", `/sessions/${id}/fire`, { shots });
  }

  /** Open the resumable event stream; returns a closer. */
  streamEvents(
    id: string,
    from: number,
    onEvent: (ev: ServerEvent) => void,
    onError?: (err: Event) => void,
  ): () => void {
    const source = new EventSource(`${this.base}/sessions/${id}/events?from=${from}`);
    source.onmessage = (msg) => {
      onEvent(JSON.parse(msg.data) as ServerEvent);
    };
    if (onError) {
      source.onerror = onError;
    }
    return () => source.close();
  }
}

export function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  if (param) {
    return param.replace(/\/$/, "");
  }
  // same origin when mounted under /ui, default dev port otherwise
  if (window.location.pathname.startsWith("/ui")) {
    return "";
  }
  return "http://127.0.0.1:8077";
}
