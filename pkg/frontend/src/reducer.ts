// Pure fold of server events into the view state.
//
// The UI never computes physics: every Bloch vector, count and herald
// verdict shown on screen enters through this reducer from server events.
// Folding the same event stream always yields the same state.

import type { ServerEvent, Vec3 } from "./types";

export interface BlochUpdate {
  component: string;
  bloch: Vec3;
  shot: number | null;
}

export interface FlightHop {
  link: string;
  shot: number | null;
}

export interface ViewState {
  lastSeq: number;
  counters: Record<string, number>;
  knobs: Record<string, number>;
  blochUpdates: BlochUpdate[];
  lastBloch: Record<string, Vec3>;
  flight: FlightHop[];
  heraldBanner: { ok: boolean; pattern: string } | null;
  heraldOk: number;
  heraldTotal: number;
  emissions: number;
  log: string[];
}

export const LOG_LIMIT = 200;

export function initialView(): ViewState {
  return {
    lastSeq: 0,
    counters: {},
    knobs: {},
    blochUpdates: [],
    lastBloch: {},
    flight: [],
    heraldBanner: null,
    heraldOk: 0,
    heraldTotal: 0,
    emissions: 0,
    log: [],
  };
}

function pushLog(log: string[], line: string): string[] {
  const next = log.concat(line);
  return next.length > LOG_LIMIT ? next.slice(next.length - LOG_LIMIT) : next;
}

export function reduce(state: ViewState, ev: ServerEvent): ViewState {
  const next: ViewState = {
    ...state,
    counters: { ...state.counters },
    knobs: { ...state.knobs },
    lastBloch: { ...state.lastBloch },
    blochUpdates: state.blochUpdates,
    flight: state.flight,
    log: state.log,
    lastSeq: ev.seq,
  };
  switch (ev.kind) {
    case "photon_emitted": {
      next.emissions += 1;
      const paths = (ev.paths ?? []).join(", ");
      next.log = pushLog(state.log, `#${ev.seq} photon emitted on ${paths}`);
      break;
    }
    case "segment_traversed": {
      next.flight = state.flight.concat({ link: ev.link ?? "", shot: ev.shot ?? null });
      break;
    }
    case "plate_crossed": {
      if (ev.bloch && ev.component) {
        next.blochUpdates = state.blochUpdates.concat({
          component: ev.component,
          bloch: ev.bloch,
          shot: ev.shot ?? null,
        });
        next.lastBloch[ev.component] = ev.bloch;
      }
      break;
    }
    case "detection": {
      const det = ev.detector ?? "?";
      next.counters[det] = (state.counters[det] ?? 0) + (ev.clicks ?? 0);
      next.log = pushLog(state.log, `#${ev.seq} ${det} clicked x${ev.clicks ?? 0}`);
      break;
    }
    case "batch": {
      for (const [det, clicks] of Object.entries(ev.per_detector ?? {})) {
        next.counters[det] = (state.counters[det] ?? 0) + clicks;
      }
      next.log = pushLog(
        state.log,
        `#${ev.seq} batch of ${ev.shots ?? 0} shots folded in`,
      );
      break;
    }
    case "herald": {
      next.heraldTotal += 1;
      if (ev.ok) {
        next.heraldOk += 1;
        next.heraldBanner = { ok: true, pattern: ev.pattern ?? "" };
        next.log = pushLog(state.log, `#${ev.seq} gate heralded (${ev.pattern})`);
      }
      break;
    }
    case "param_changed": {
      if (ev.component && typeof ev.value === "number") {
        next.knobs[ev.component] = ev.value;
      }
      break;
    }
  }
  return next;
}

export function reduceAll(events: ServerEvent[], start?: ViewState): ViewState {
  let state = start ?? initialView();
  for (const ev of events) {
    state = reduce(state, ev);
  }
  return state;
}

export function foldedCounters(events: ServerEvent[]): Record<string, number> {
  return reduceAll(events).counters;
}
