/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_hullview_free: (a: number, b: number) => void;
export const __wbg_layerview_free: (a: number, b: number) => void;
export const hullview_nl: (a: number) => [number, number];
export const hullview_nl_sup: (a: number) => number;
export const hullview_nodes: (a: number) => [number, number];
export const hullview_offsets: (a: number) => [number, number];
export const layerview_c0: (a: number) => number;
export const layerview_deviation: (a: number) => [number, number];
export const layerview_hull: (a: number, b: number, c: number) => [number, number, number];
export const layerview_new: (a: number, b: number) => [number, number, number];
export const layerview_phi: (a: number) => [number, number];
export const layerview_xs: (a: number) => [number, number];
export const particles: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
