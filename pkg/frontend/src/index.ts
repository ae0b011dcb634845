export * from "./api.js";
export * from "./brush.js";
export * from "./geometry.js";
export * from "./labels.js";
export * from "./params.js";
export * from "./poller.js";
export * from "./raster.js";
export { mountApp, decodePgm } from "./app.js";
