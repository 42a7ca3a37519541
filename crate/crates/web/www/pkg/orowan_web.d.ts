/* tslint:disable */
/* eslint-disable */

export class HullView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    nl(): Float64Array;
    nl_sup(): number;
    nodes(): Float64Array;
    offsets(): Float64Array;
}

export class LayerView {
    free(): void;
    [Symbol.dispose](): void;
    c0(): number;
    /**
     * `φ − 1/2 − arctan(αx)/π`.
     */
    deviation(): Float64Array;
    hull(delta: number, l: number): HullView;
    constructor(label: string);
    phi(): Float64Array;
    xs(): Float64Array;
}

export function particles(n: number, spacing: number, c0: number, l0: number, wrapped: boolean, t: number, frames: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_hullview_free: (a: number, b: number) => void;
    readonly __wbg_layerview_free: (a: number, b: number) => void;
    readonly hullview_nl: (a: number) => [number, number];
    readonly hullview_nl_sup: (a: number) => number;
    readonly hullview_nodes: (a: number) => [number, number];
    readonly hullview_offsets: (a: number) => [number, number];
    readonly layerview_c0: (a: number) => number;
    readonly layerview_deviation: (a: number) => [number, number];
    readonly layerview_hull: (a: number, b: number, c: number) => [number, number, number];
    readonly layerview_new: (a: number, b: number) => [number, number, number];
    readonly layerview_phi: (a: number) => [number, number];
    readonly layerview_xs: (a: number) => [number, number];
    readonly particles: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
