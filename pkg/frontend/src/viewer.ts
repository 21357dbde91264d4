import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";
import type { InterpolationJson, TaskDetail, WaypointJson } from "./types";

const GRIPPER_COLORS: Record<string, number> = {
  open: 0x3ecf6b,
  closed: 0xe0484d,
  holding: 0xe6c84a,
};

export class Viewer {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private controls: OrbitControls;
  private cloud: THREE.Points | null = null;
  private waypointGroup = new THREE.Group();
  private ghost: THREE.Line | null = null;
  private marker: THREE.Mesh;

  constructor(container: HTMLElement) {
    this.camera = new THREE.PerspectiveCamera(
      50,
      container.clientWidth / container.clientHeight,
      0.001,
      50
    );
    this.camera.position.set(0.25, -0.35, 0.25);
    this.camera.up.set(0, 0, 1);

    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(container.clientWidth, container.clientHeight);
    this.renderer.setClearColor(0x10141a);
    container.appendChild(this.renderer.domElement);

    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(0, 0, 0);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.9));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(0.5, -1, 1);
    this.scene.add(sun);
    this.scene.add(this.waypointGroup);
    this.scene.add(new THREE.AxesHelper(0.05));

    // Playback marker: a simplified two-finger gripper glyph.
    const glyph = new THREE.Group();
    const palm = new THREE.Mesh(
      new THREE.BoxGeometry(0.02, 0.004, 0.004),
      new THREE.MeshStandardMaterial({ color: 0xdddddd })
    );
    const fingerGeo = new THREE.BoxGeometry(0.004, 0.004, 0.014);
    const left = new THREE.Mesh(fingerGeo, palm.material);
    const right = new THREE.Mesh(fingerGeo, palm.material);
    left.position.set(-0.008, 0, 0.008);
    right.position.set(0.008, 0, 0.008);
    glyph.add(palm, left, right);
    const wrapper = new THREE.Mesh(new THREE.SphereGeometry(0.0001), new THREE.MeshBasicMaterial());
    wrapper.add(glyph);
    this.marker = wrapper;
    this.scene.add(this.marker);

    const animate = () => {
      requestAnimationFrame(animate);
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();

    window.addEventListener("resize", () => {
      this.camera.aspect = container.clientWidth / container.clientHeight;
      this.camera.updateProjectionMatrix();
      this.renderer.setSize(container.clientWidth, container.clientHeight);
    });
  }

  showTask(detail: TaskDetail): void {
    if (this.cloud) this.scene.remove(this.cloud);
    const n = detail.points.length;
    const positions = new Float32Array(n * 3);
    const colors = new Float32Array(n * 3);
    const highlighted = new Set(detail.highlight);
    for (let i = 0; i < n; i++) {
      const [x, y, z, r, g, b] = detail.points[i];
      positions.set([x, y, z], i * 3);
      const boost = highlighted.has(i) ? 1.25 : 0.55;
      colors.set(
        [Math.min((r / 255) * boost, 1), Math.min((g / 255) * boost, 1), Math.min((b / 255) * boost, 1)],
        i * 3
      );
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
    const material = new THREE.PointsMaterial({ size: 0.004, vertexColors: true });
    this.cloud = new THREE.Points(geometry, material);
    this.scene.add(this.cloud);
  }

  showTrajectory(waypoints: WaypointJson[], selected: number | null): void {
    this.waypointGroup.clear();
    waypoints.forEach((wp, i) => {
      const color = GRIPPER_COLORS[wp.g] ?? 0xffffff;
      const size = i === selected ? 0.009 : 0.006;
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(size),
        new THREE.MeshStandardMaterial({ color })
      );
      mesh.position.set(wp.t[0], wp.t[1], wp.t[2]);
      mesh.quaternion.set(wp.r[0], wp.r[1], wp.r[2], wp.r[3]);
      this.waypointGroup.add(mesh);
    });
  }

  showGhost(preview: InterpolationJson | null): void {
    if (this.ghost) {
      this.scene.remove(this.ghost);
      this.ghost = null;
    }
    if (!preview || preview.waypoints.length < 2) return;
    const pts = preview.waypoints.map((w) => new THREE.Vector3(w.t[0], w.t[1], w.t[2]));
    const geometry = new THREE.BufferGeometry().setFromPoints(pts);
    const material = new THREE.LineBasicMaterial({
      color: 0x9ab8ff,
      transparent: true,
      opacity: 0.55,
    });
    this.ghost = new THREE.Line(geometry, material);
    this.scene.add(this.ghost);
  }

  placeMarker(wp: WaypointJson | null): void {
    if (!wp) {
      this.marker.visible = false;
      return;
    }
    this.marker.visible = true;
    this.marker.position.set(wp.t[0], wp.t[1], wp.t[2]);
    this.marker.quaternion.set(wp.r[0], wp.r[1], wp.r[2], wp.r[3]);
  }
}
