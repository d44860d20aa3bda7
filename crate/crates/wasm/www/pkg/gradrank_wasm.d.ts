/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    explain(query: string, doc: string, window: number): string;
    heatmap(which: string, cell_px: number): Image;
    /**
     * Generates the corpus and trains the model; takes a moment.
     */
    constructor(seed: number);
    sample(index: number): string;
    snippets(window: number): string;
    summary(): string;
}

/**
 * Rendered RGBA image with its dimensions, handed to `ImageData`.
 */
export class Image {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly height: number;
    readonly rgba: Uint8Array;
    readonly width: number;
}

/**
 * Upsamples a grid and renders it as a heatmap image.
 */
export function upsample_image(values: Float64Array, rows: number, cols: number, target_rows: number, target_cols: number, cell_px: number): Image;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_image_free: (a: number, b: number) => void;
    readonly demo_explain: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_heatmap: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_new: (a: number) => [number, number, number];
    readonly demo_sample: (a: number, b: number) => [number, number];
    readonly demo_snippets: (a: number, b: number) => [number, number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly image_height: (a: number) => number;
    readonly image_rgba: (a: number) => [number, number];
    readonly image_width: (a: number) => number;
    readonly upsample_image: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
