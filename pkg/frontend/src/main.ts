import { ApiClient } from "./api.js";
import { LabelerApp } from "./app.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");
new LabelerApp(root, new ApiClient()).start();
