// Typed client for the blend service JSON endpoints. All geometry shown by
// the UI originates from these responses; nothing is computed client-side.

export interface SessionInfo {
    m: number;
    vertexCount: number;
    faceCount: number;
    tetCount: number;
    method: string;
    shapeNames: string[];
}

export interface MeshPayload {
    vertices: number[];
    faces: number[];
}

export interface SolveReport {
    energy: number;
    iterations: number;
    converged: boolean;
    millis: number;
}

export interface BlendResult {
    vertices: number[];
    report: SolveReport;
}

export type Energy = 'ET' | 'ES';
export type BlendFn = 'C' | 'P';

export interface BlendParams {
    weights: number[];
    energy: Energy;
    blendFn: BlendFn;
}

export class ApiError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
        this.name = 'ApiError';
    }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(res: Response): Promise<string> {
    try {
        const doc = (await res.json()) as { error?: string };
        if (doc && typeof doc.error === 'string') {
            return doc.error;
        }
    } catch {
        // non-JSON body; fall through to the status line
    }
    return `request failed with status ${res.status}`;
}

export class ApiClient {
    private fetchFn: FetchLike;

    constructor(private baseUrl = '', fetchFn?: FetchLike) {
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }

    private async getJson<T>(path: string): Promise<T> {
        const res = await this.fetchFn(this.baseUrl + path);
        if (!res.ok) {
            throw new ApiError(res.status, await errorMessage(res));
        }
        return (await res.json()) as T;
    }

    session(): Promise<SessionInfo> {
        return this.getJson<SessionInfo>('/api/session');
    }

    mesh(index: number): Promise<MeshPayload> {
        return this.getJson<MeshPayload>(`/api/mesh/${index}`);
    }

    async blend(params: BlendParams): Promise<BlendResult> {
        const res = await this.fetchFn(this.baseUrl + '/api/blend', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({
                weights: params.weights,
                energy: params.energy,
                blendFn: params.blendFn,
            }),
        });
        if (!res.ok) {
            throw new ApiError(res.status, await errorMessage(res));
        }
        return (await res.json()) as BlendResult;
    }
}
