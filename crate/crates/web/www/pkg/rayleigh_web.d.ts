/* tslint:disable */
/* eslint-disable */

/**
 * Sup distance between the light-particle system and the pair system from
 * one matched draw, for each mass in `masses` (comma separated).
 */
export function convergence_errors(masses: string, horizon: number, seed: bigint): string;

/**
 * Histogram of `n` draws of the pair separation at strength `c`, next to
 * its density at the bin centres.
 */
export function separation_histogram(c: number, n: number, bins: number, seed: bigint): string;

/**
 * Empirical `Var(Q_t)` and its tail slope from one run.
 *
 * `kind` is `type1` (param = mass), `type2` (param = c) or `mixed`.
 */
export function variance_curve(kind: string, param: number, samples: number, horizon: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly convergence_errors: (a: number, b: number, c: number, d: bigint) => [number, number];
    readonly separation_histogram: (a: number, b: number, c: number, d: bigint) => [number, number];
    readonly variance_curve: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
