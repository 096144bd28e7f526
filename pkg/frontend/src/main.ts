import { ApiClient } from './api.js';
import { ChatApp } from './app.js';

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('api') ?? 'http://127.0.0.1:8080';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const app = new ChatApp(new ApiClient(baseUrl), root);
void app.start();
