/* tslint:disable */
/* eslint-disable */

/**
 * Boundary polyline of a two-dimensional domain, for drawing.
 */
export function outline(domain_json: string, samples: number): string;

/**
 * σ-iterates of the rate recursion for φ(t) = (M/θ)t^θ next to the closed-form envelope.
 */
export function rates(m: number, theta: number, l: number, tau: number, f0: number, k: number): string;

/**
 * Runs a full config and returns the outer path, the first inner chain and the certificate.
 */
export function solve(config_json: string): string;

/**
 * Projection of g onto the tangent cone at x, and its norm.
 */
export function tangent(domain_json: string, x: Float64Array, g: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly outline: (a: number, b: number, c: number) => [number, number];
    readonly rates: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly solve: (a: number, b: number) => [number, number];
    readonly tangent: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __externref_table_alloc: () => number;
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
