// UI state and request discipline: one debounced blend request per burst of
// slider edits, stale responses discarded so the displayed buffer always
// belongs to the newest answered request.

import { ApiClient, BlendFn, Energy, SolveReport } from './api.js';

export interface UiState {
    weights: number[];
    energy: Energy;
    blendFn: BlendFn;
    // verbatim vertex array of the most recently displayed service response
    vertices: number[];
    report: SolveReport | null;
    latencyMs: number | null;
    error: string | null;
    pending: boolean;
}

export type Listener = (state: UiState) => void;

function now(): number {
    return typeof performance !== 'undefined' ? performance.now() : Date.now();
}

export class BlendStore {
    private state: UiState;
    private listeners = new Set<Listener>();
    private timer: ReturnType<typeof setTimeout> | null = null;
    private requestSeq = 0;
    private displaySeq = 0;

    constructor(
        private client: Pick<ApiClient, 'blend'>,
        targetCount: number,
        restVertices: number[],
        private debounceMs = 75,
    ) {
        this.state = {
            weights: new Array<number>(targetCount).fill(0),
            energy: 'ET',
            blendFn: 'C',
            vertices: restVertices,
            report: null,
            latencyMs: null,
            error: null,
            pending: false,
        };
    }

    getState(): UiState {
        return this.state;
    }

    subscribe(listener: Listener): () => void {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }

    // weights are deliberately unclamped: extrapolation is part of the model
    setWeight(index: number, value: number): void {
        if (index < 0 || index >= this.state.weights.length) {
            throw new RangeError(`no weight slot ${index}`);
        }
        if (!Number.isFinite(value)) {
            return;
        }
        const weights = this.state.weights.slice();
        weights[index] = value;
        this.patch({ weights });
        this.schedule();
    }

    setWeights(values: number[]): void {
        if (values.length !== this.state.weights.length) {
            throw new RangeError(`expected ${this.state.weights.length} weights`);
        }
        this.patch({ weights: values.slice() });
        this.schedule();
    }

    setEnergy(energy: Energy): void {
        if (energy === this.state.energy) {
            return;
        }
        this.patch({ energy });
        this.schedule();
    }

    setBlendFn(blendFn: BlendFn): void {
        if (blendFn === this.state.blendFn) {
            return;
        }
        this.patch({ blendFn });
        this.schedule();
    }

    // cancel the debounce window and issue the request immediately
    flush(): Promise<void> {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
        }
        return this.send();
    }

    dispose(): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
        }
        this.listeners.clear();
    }

    private schedule(): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
        }
        this.timer = setTimeout(() => {
            this.timer = null;
            void this.send();
        }, this.debounceMs);
        this.emit();
    }

    private async send(): Promise<void> {
        const id = ++this.requestSeq;
        const started = now();
        const { weights, energy, blendFn } = this.state;
        try {
            const result = await this.client.blend({ weights: weights.slice(), energy, blendFn });
            if (id <= this.displaySeq) {
                return; // a newer response is already on screen
            }
            this.displaySeq = id;
            this.patch({
                vertices: result.vertices,
                report: result.report,
                latencyMs: now() - started,
                error: null,
            });
        } catch (err) {
            if (id <= this.displaySeq) {
                return; // stale failure, the screen has moved on
            }
            this.displaySeq = id;
            this.patch({ error: err instanceof Error ? err.message : String(err) });
        }
    }

    private patch(changes: Partial<UiState>): void {
        this.state = { ...this.state, ...changes };
        this.emit();
    }

    private emit(): void {
        this.state = {
            ...this.state,
            pending: this.timer !== null || this.requestSeq > this.displaySeq,
        };
        for (const listener of this.listeners) {
            listener(this.state);
        }
    }
}
