/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_image_free: (a: number, b: number) => void;
export const demo_explain: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const demo_heatmap: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demo_new: (a: number) => [number, number, number];
export const demo_sample: (a: number, b: number) => [number, number];
export const demo_snippets: (a: number, b: number) => [number, number, number, number];
export const demo_summary: (a: number) => [number, number];
export const image_height: (a: number) => number;
export const image_rgba: (a: number) => [number, number];
export const image_width: (a: number) => number;
export const upsample_image: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
