/* tslint:disable */
/* eslint-disable */

/**
 * A canonical energy paired with its quadratic measure.
 */
export class Model {
    free(): void;
    [Symbol.dispose](): void;
    dualCurve(lo: number, hi: number, n: number, unscaled: boolean): Float64Array;
    landscape(tau: number, lo: number, hi: number, n: number): Float64Array;
    constructor(kind: string, p1: number, p2: number, a: number, b: number);
    roots(tau_sq: number, dim: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_model_free: (a: number, b: number) => void;
    readonly model_dualCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly model_landscape: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly model_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly model_roots: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
