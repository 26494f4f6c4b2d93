/** Browser entry point: wire the controller to the page and start polling. */

import { ApiClient } from "./api.js";
import { ConsoleController } from "./controller.js";
import { bindEvents, DomView } from "./domview.js";

const api = new ApiClient("", (url, init) => fetch(url, init));
const controller = new ConsoleController(api, new DomView(document));
bindEvents(document, controller);
controller.start();
