// three.js materialization of a SceneModel. Only scene-graph objects are
// built here (meshes, edge lines, dashed links), so everything works
// headless; the caller owns the WebGLRenderer, the canvas, and the loop.

import * as THREE from "three";
import type { Screenshot } from "./issueForm";
import type { Mark, Vec3 } from "./protocol";
import type { CameraState, SceneModel } from "./scene";

const MARK_COLORS: Record<Mark, string> = {
  plus: "#2e7d32",
  pencil: "#f9a825",
  arrow: "#1565c0",
  "x-cross": "#c62828",
  "plus-dashed": "#2e7d32",
  stripe: "#c62828",
};

const LINK_COLOR = "#78909c";

function lineBetween(points: Vec3[], material: THREE.Material): THREE.Line {
  const geometry = new THREE.BufferGeometry().setFromPoints(
    points.map(([x, y, z]) => new THREE.Vector3(x, y, z)),
  );
  return new THREE.Line(geometry, material);
}

function boxOverlay(entityId: string, mark: Mark, box: SceneModel["boxes"][string]["box"]): THREE.Object3D {
  const color = MARK_COLORS[mark];
  const group = new THREE.Group();
  group.name = `overlay:${entityId}`;
  group.userData = { entityId, mark };

  const edges = new THREE.LineSegments(
    new THREE.EdgesGeometry(new THREE.BoxGeometry(box.width, box.height, box.depth)),
    new THREE.LineBasicMaterial({ color }),
  );
  edges.position.set(box.x + box.width / 2, box.y + box.height / 2, box.z + box.depth / 2);
  group.add(edges);

  if (mark === "x-cross") {
    // Deleted entities stay in the city; the cross on the roof says so.
    const top = box.y + box.height + 0.02;
    const material = new THREE.LineBasicMaterial({ color });
    group.add(
      lineBetween([[box.x, top, box.z], [box.x + box.width, top, box.z + box.depth]], material),
      lineBetween([[box.x + box.width, top, box.z], [box.x, top, box.z + box.depth]], material),
    );
  }
  return group;
}

/**
 * Build the render tree. Object names are stable (`box:`, `link:`,
 * `overlay:`, `outline:` plus the entity id) and every object carries
 * its entityId in userData, which is what picking uses.
 */
export function buildCityGroup(scene: SceneModel): THREE.Group {
  const root = new THREE.Group();
  root.name = "city";

  for (const [entityId, { box, color }] of Object.entries(scene.boxes)) {
    const mesh = new THREE.Mesh(
      new THREE.BoxGeometry(box.width, box.height, box.depth),
      new THREE.MeshLambertMaterial({ color }),
    );
    mesh.name = `box:${entityId}`;
    mesh.userData = { entityId };
    mesh.position.set(box.x + box.width / 2, box.y + box.height / 2, box.z + box.depth / 2);
    root.add(mesh);
  }

  for (const [entityId, line] of Object.entries(scene.links)) {
    const mark = scene.textureOverlays[entityId];
    const material = mark
      ? new THREE.LineDashedMaterial({ color: MARK_COLORS[mark], dashSize: 0.3, gapSize: 0.2 })
      : new THREE.LineBasicMaterial({ color: LINK_COLOR });
    const object = lineBetween([line.from, line.to], material);
    object.name = `link:${entityId}`;
    object.userData = mark ? { entityId, mark } : { entityId };
    object.computeLineDistances();
    root.add(object);
  }

  for (const [entityId, mark] of Object.entries(scene.textureOverlays)) {
    const sceneBox = scene.boxes[entityId];
    if (sceneBox) root.add(boxOverlay(entityId, mark, sceneBox.box));
    // link overlays are the dashed materials above
  }

  for (const [entityId, color] of Object.entries(scene.selectionOutlines)) {
    const sceneBox = scene.boxes[entityId];
    if (sceneBox) {
      const { box } = sceneBox;
      const outline = new THREE.LineSegments(
        new THREE.EdgesGeometry(new THREE.BoxGeometry(box.width, box.height, box.depth)),
        new THREE.LineBasicMaterial({ color }),
      );
      outline.scale.setScalar(1.05);
      outline.position.set(box.x + box.width / 2, box.y + box.height / 2, box.z + box.depth / 2);
      outline.name = `outline:${entityId}`;
      outline.userData = { entityId, outline: color };
      root.add(outline);
    } else {
      const line = scene.links[entityId];
      const raised: Vec3[] = [
        [line.from[0], line.from[1] + 0.06, line.from[2]],
        [line.to[0], line.to[1] + 0.06, line.to[2]],
      ];
      const object = lineBetween(raised, new THREE.LineBasicMaterial({ color }));
      object.name = `outline:${entityId}`;
      object.userData = { entityId, outline: color };
      root.add(object);
    }
  }

  return root;
}

export function applyCamera(camera: THREE.PerspectiveCamera, state: CameraState): void {
  camera.position.set(...state.position);
  camera.lookAt(new THREE.Vector3(...state.target));
  camera.updateProjectionMatrix();
}

/** Snapshot the rendering canvas as a PNG attachment for the issue form. */
export function captureScreenshot(canvas: HTMLCanvasElement, fileName: string): Screenshot {
  const dataUrl = canvas.toDataURL("image/png");
  const prefix = "data:image/png;base64,";
  if (!dataUrl.startsWith(prefix)) {
    throw new Error("canvas did not produce a PNG data URL");
  }
  return { fileName, dataBase64: dataUrl.slice(prefix.length) };
}

export function disposeCityGroup(root: THREE.Group): void {
  root.traverse((object) => {
    const mesh = object as Partial<THREE.Mesh>;
    if (mesh.geometry) mesh.geometry.dispose();
    const material = mesh.material;
    if (Array.isArray(material)) material.forEach((m) => m.dispose());
    else material?.dispose();
  });
}
