// WebGL2 mesh viewport: flat-shaded triangles, optional wireframe overlay,
// orbit/pan/zoom camera. Renders at most once per animation frame.

import { lookAt, multiply, perspective, Vec3 } from './mat4.js';

const VERT_SRC = `#version 300 es
in vec3 aPosition;
uniform mat4 uMvp;
uniform mat4 uView;
out vec3 vViewPos;
void main() {
    vViewPos = (uView * vec4(aPosition, 1.0)).xyz;
    gl_Position = uMvp * vec4(aPosition, 1.0);
}`;

// face normals from screen-space derivatives give flat shading without
// duplicating vertices per face
const FRAG_SRC = `#version 300 es
precision highp float;
in vec3 vViewPos;
uniform vec3 uColor;
uniform bool uFlat;
out vec4 outColor;
void main() {
    if (uFlat) {
        vec3 n = normalize(cross(dFdx(vViewPos), dFdy(vViewPos)));
        float diffuse = max(dot(n, vec3(0.0, 0.0, 1.0)), 0.0);
        outColor = vec4(uColor * (0.25 + 0.75 * diffuse), 1.0);
    } else {
        outColor = vec4(uColor, 1.0);
    }
}`;

function compile(gl: WebGL2RenderingContext, type: number, src: string): WebGLShader {
    const shader = gl.createShader(type);
    if (shader === null) {
        throw new Error('shader allocation failed');
    }
    gl.shaderSource(shader, src);
    gl.compileShader(shader);
    if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
        throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
    }
    return shader;
}

function buildProgram(gl: WebGL2RenderingContext): WebGLProgram {
    const program = gl.createProgram();
    if (program === null) {
        throw new Error('program allocation failed');
    }
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERT_SRC));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAG_SRC));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
        throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    return program;
}

function uniqueEdges(faces: number[]): Uint32Array {
    const seen = new Set<number>();
    const edges: number[] = [];
    const push = (a: number, b: number) => {
        const lo = Math.min(a, b);
        const hi = Math.max(a, b);
        const key = lo * 0x1000000 + hi;
        if (!seen.has(key)) {
            seen.add(key);
            edges.push(lo, hi);
        }
    };
    for (let i = 0; i + 2 < faces.length; i += 3) {
        push(faces[i], faces[i + 1]);
        push(faces[i + 1], faces[i + 2]);
        push(faces[i + 2], faces[i]);
    }
    return new Uint32Array(edges);
}

export class Viewer {
    private gl: WebGL2RenderingContext;
    private program: WebGLProgram;
    private positionBuffer: WebGLBuffer;
    private triangleIndexBuffer: WebGLBuffer;
    private edgeIndexBuffer: WebGLBuffer;
    private triangleCount = 0;
    private edgeCount = 0;
    private vertexData = new Float32Array(0);
    private wireframe = false;
    private dirty = false;
    private rafPending = false;

    private yaw = 0.6;
    private pitch = 0.4;
    private radius = 5;
    private target: Vec3 = [0, 0, 0];

    private uMvp: WebGLUniformLocation;
    private uView: WebGLUniformLocation;
    private uColor: WebGLUniformLocation;
    private uFlat: WebGLUniformLocation;

    constructor(private canvas: HTMLCanvasElement) {
        const gl = canvas.getContext('webgl2');
        if (gl === null) {
            throw new Error('WebGL2 is not available in this browser');
        }
        this.gl = gl;
        this.program = buildProgram(gl);
        this.positionBuffer = gl.createBuffer() as WebGLBuffer;
        this.triangleIndexBuffer = gl.createBuffer() as WebGLBuffer;
        this.edgeIndexBuffer = gl.createBuffer() as WebGLBuffer;
        this.uMvp = gl.getUniformLocation(this.program, 'uMvp') as WebGLUniformLocation;
        this.uView = gl.getUniformLocation(this.program, 'uView') as WebGLUniformLocation;
        this.uColor = gl.getUniformLocation(this.program, 'uColor') as WebGLUniformLocation;
        this.uFlat = gl.getUniformLocation(this.program, 'uFlat') as WebGLUniformLocation;

        gl.enable(gl.DEPTH_TEST);
        gl.clearColor(0.11, 0.12, 0.14, 1.0);

        this.bindInput();
        new ResizeObserver(() => this.requestRender()).observe(canvas);
    }

    setMesh(vertices: number[], faces: number[]): void {
        const gl = this.gl;
        this.vertexData = new Float32Array(vertices);
        gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
        gl.bufferData(gl.ARRAY_BUFFER, this.vertexData, gl.DYNAMIC_DRAW);

        const tri = new Uint32Array(faces);
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.triangleIndexBuffer);
        gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, tri, gl.STATIC_DRAW);
        this.triangleCount = tri.length;

        const edges = uniqueEdges(faces);
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.edgeIndexBuffer);
        gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, edges, gl.STATIC_DRAW);
        this.edgeCount = edges.length;

        this.fitCamera();
        this.requestRender();
    }

    updateVertices(vertices: number[]): void {
        if (vertices.length !== this.vertexData.length) {
            this.setMesh(vertices, []);
            return;
        }
        this.vertexData.set(vertices);
        const gl = this.gl;
        gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
        gl.bufferSubData(gl.ARRAY_BUFFER, 0, this.vertexData);
        this.requestRender();
    }

    setWireframe(on: boolean): void {
        this.wireframe = on;
        this.requestRender();
    }

    private fitCamera(): void {
        const v = this.vertexData;
        if (v.length < 3) {
            return;
        }
        const lo = [Infinity, Infinity, Infinity];
        const hi = [-Infinity, -Infinity, -Infinity];
        for (let i = 0; i < v.length; i += 3) {
            for (let k = 0; k < 3; k++) {
                lo[k] = Math.min(lo[k], v[i + k]);
                hi[k] = Math.max(hi[k], v[i + k]);
            }
        }
        this.target = [
            (lo[0] + hi[0]) / 2,
            (lo[1] + hi[1]) / 2,
            (lo[2] + hi[2]) / 2,
        ];
        const diag = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]);
        this.radius = Math.max(diag * 1.4, 1e-3);
    }

    private eye(): Vec3 {
        const cp = Math.cos(this.pitch);
        return [
            this.target[0] + this.radius * cp * Math.sin(this.yaw),
            this.target[1] + this.radius * Math.sin(this.pitch),
            this.target[2] + this.radius * cp * Math.cos(this.yaw),
        ];
    }

    private bindInput(): void {
        const canvas = this.canvas;
        let button = -1;
        let lastX = 0;
        let lastY = 0;

        canvas.addEventListener('pointerdown', (ev) => {
            button = ev.button;
            lastX = ev.clientX;
            lastY = ev.clientY;
            canvas.setPointerCapture(ev.pointerId);
        });
        canvas.addEventListener('pointerup', (ev) => {
            button = -1;
            canvas.releasePointerCapture(ev.pointerId);
        });
        canvas.addEventListener('pointermove', (ev) => {
            if (button < 0) {
                return;
            }
            const dx = ev.clientX - lastX;
            const dy = ev.clientY - lastY;
            lastX = ev.clientX;
            lastY = ev.clientY;
            if (button === 0 && !ev.shiftKey) {
                this.yaw -= dx * 0.008;
                this.pitch = Math.min(1.5, Math.max(-1.5, this.pitch + dy * 0.008));
            } else {
                this.pan(dx, dy);
            }
            this.requestRender();
        });
        canvas.addEventListener('wheel', (ev) => {
            ev.preventDefault();
            this.radius *= Math.exp(ev.deltaY * 0.001);
            this.radius = Math.min(1e4, Math.max(1e-3, this.radius));
            this.requestRender();
        }, { passive: false });
        canvas.addEventListener('contextmenu', (ev) => ev.preventDefault());
    }

    private pan(dx: number, dy: number): void {
        // move the orbit target in the camera plane
        const scale = this.radius * 0.0015;
        const cp = Math.cos(this.pitch);
        const sp = Math.sin(this.pitch);
        const right: Vec3 = [Math.cos(this.yaw), 0, -Math.sin(this.yaw)];
        const up: Vec3 = [-sp * Math.sin(this.yaw), cp, -sp * Math.cos(this.yaw)];
        for (let k = 0; k < 3; k++) {
            this.target[k] += (-dx * right[k] + dy * up[k]) * scale;
        }
    }

    private requestRender(): void {
        this.dirty = true;
        if (this.rafPending) {
            return;
        }
        this.rafPending = true;
        requestAnimationFrame(() => {
            this.rafPending = false;
            if (this.dirty) {
                this.dirty = false;
                this.render();
            }
        });
    }

    private render(): void {
        const gl = this.gl;
        const canvas = this.canvas;
        const width = Math.max(1, canvas.clientWidth);
        const height = Math.max(1, canvas.clientHeight);
        const dpr = window.devicePixelRatio || 1;
        const pw = Math.round(width * dpr);
        const ph = Math.round(height * dpr);
        if (canvas.width !== pw || canvas.height !== ph) {
            canvas.width = pw;
            canvas.height = ph;
        }
        gl.viewport(0, 0, pw, ph);
        gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
        if (this.triangleCount === 0) {
            return;
        }

        const view = lookAt(this.eye(), this.target, [0, 1, 0]);
        const proj = perspective(Math.PI / 4, width / height, this.radius * 0.01, this.radius * 100);
        const mvp = multiply(proj, view);

        gl.useProgram(this.program);
        gl.uniformMatrix4fv(this.uMvp, false, mvp);
        gl.uniformMatrix4fv(this.uView, false, view);
        gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
        const loc = gl.getAttribLocation(this.program, 'aPosition');
        gl.enableVertexAttribArray(loc);
        gl.vertexAttribPointer(loc, 3, gl.FLOAT, false, 0, 0);

        // push triangles back slightly so wireframe lines win the depth test
        gl.enable(gl.POLYGON_OFFSET_FILL);
        gl.polygonOffset(1, 1);
        gl.uniform3f(this.uColor, 0.49, 0.62, 0.85);
        gl.uniform1i(this.uFlat, 1);
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.triangleIndexBuffer);
        gl.drawElements(gl.TRIANGLES, this.triangleCount, gl.UNSIGNED_INT, 0);
        gl.disable(gl.POLYGON_OFFSET_FILL);

        if (this.wireframe && this.edgeCount > 0) {
            gl.uniform3f(this.uColor, 0.92, 0.94, 0.98);
            gl.uniform1i(this.uFlat, 0);
            gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.edgeIndexBuffer);
            gl.drawElements(gl.LINES, this.edgeCount, gl.UNSIGNED_INT, 0);
        }
    }
}
