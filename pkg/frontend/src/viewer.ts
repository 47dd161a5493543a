// Three.js point cloud view: orbit/zoom, per-label color, legend isolation.
// One THREE.Points object per label so a legend click can hide exactly that
// label's points without rebuilding buffers.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import type { ScenePayload } from "./api.js";
import type { ViewModel } from "./state.js";

const POINT_BUDGET = 200_000; // render-side downsample only; assignments stay full-resolution
const GRAY: [number, number, number] = [0.6, 0.6, 0.6];

export class SceneViewer {
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly controls: OrbitControls;
  private groups = new Map<string, THREE.Points>();
  private hidden = new Set<string>();
  private payload: ScenePayload | null = null;
  private sampleStride = 1;

  constructor(canvas: HTMLCanvasElement, width: number, height: number) {
    this.camera = new THREE.PerspectiveCamera(55, width / height, 0.01, 100);
    this.camera.position.set(4, -6, 4);
    this.camera.up.set(0, 0, 1);
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setSize(width, height, false);
    this.renderer.setClearColor(0x111418);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.addEventListener("change", () => this.render());
  }

  setSize(width: number, height: number): void {
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(width, height, false);
    this.render();
  }

  /** Load scene geometry; points render uniform gray until a query arrives. */
  setScene(payload: ScenePayload): void {
    this.payload = payload;
    this.sampleStride = Math.max(1, Math.ceil(payload.point_count / POINT_BUDGET));
    this.showAssignments(null);
    const center = this.centroid();
    this.controls.target.copy(center);
    this.controls.update();
    this.render();
  }

  private centroid(): THREE.Vector3 {
    const out = new THREE.Vector3();
    if (!this.payload) return out;
    const { xyz, point_count } = this.payload;
    for (let i = 0; i < point_count; i++) {
      out.x += xyz[3 * i];
      out.y += xyz[3 * i + 1];
      out.z += xyz[3 * i + 2];
    }
    return out.divideScalar(Math.max(1, point_count));
  }

  /** Rebuild the per-label point groups from a view model (null = pre-query). */
  showAssignments(view: ViewModel | null): void {
    for (const points of this.groups.values()) {
      this.scene.remove(points);
      points.geometry.dispose();
      (points.material as THREE.Material).dispose();
    }
    this.groups.clear();
    this.hidden.clear();
    if (!this.payload) return;

    const { xyz, point_count } = this.payload;
    const buckets = new Map<string, { positions: number[]; color: [number, number, number] }>();
    for (let i = 0; i < point_count; i += this.sampleStride) {
      let label = "(unsegmented)";
      let color = GRAY;
      if (view && view.assignments.length === point_count) {
        label = view.labels[view.assignments[i]];
        color = view.legend.find((row) => row.label === label)?.color ?? GRAY;
      }
      let bucket = buckets.get(label);
      if (!bucket) {
        bucket = { positions: [], color };
        buckets.set(label, bucket);
      }
      bucket.positions.push(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]);
    }
    for (const [label, bucket] of buckets) {
      const geometry = new THREE.BufferGeometry();
      geometry.setAttribute(
        "position",
        new THREE.Float32BufferAttribute(bucket.positions, 3),
      );
      const material = new THREE.PointsMaterial({
        size: 0.035,
        color: new THREE.Color(...bucket.color),
      });
      const points = new THREE.Points(geometry, material);
      this.scene.add(points);
      this.groups.set(label, points);
    }
    this.render();
  }

  /** Legend click: isolate one label (click again to show everything). */
  toggleIsolate(label: string): void {
    const isolating = !this.hidden.size && this.groups.has(label);
    if (isolating) {
      for (const [other, points] of this.groups) {
        if (other !== label) {
          points.visible = false;
          this.hidden.add(other);
        }
      }
    } else {
      for (const other of this.hidden) {
        const points = this.groups.get(other);
        if (points) points.visible = true;
      }
      this.hidden.clear();
    }
    this.render();
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
