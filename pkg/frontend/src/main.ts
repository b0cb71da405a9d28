import { createApiClient } from './api';
import { AnnotationApp } from './app';

function annotatorId(): string {
  const fromUrl = new URLSearchParams(window.location.search).get('annotator');
  if (fromUrl) {
    return fromUrl;
  }
  let id = '';
  while (!id) {
    id = (window.prompt('Annotator id:') ?? '').trim();
  }
  return id;
}

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app mount point');
}
const app = new AnnotationApp({
  root,
  api: createApiClient((url, init) => fetch(url, init)),
  annotator: annotatorId(),
});
void app.start();
