export {
  BridgeError,
  BridgeOptions,
  BridgeReply,
  PythonBridge,
} from './bridge.js';
export {
  ActionArityError,
  BoundEnvironment,
  ClosedEnvironmentError,
  EnvSource,
  StepInfo,
  StepResult,
} from './env.js';
export {
  DEVICE_LOAD,
  DEVICE_RENEWABLE,
  DEVICE_STORAGE,
  NetworkDevice,
  NetworkFile,
  StateSnapshot,
  extractAction,
  fullStateObservation,
  parseSnapshot,
  readNetworkFile,
  readSnapshots,
} from './snapshots.js';
export { CheckerOptions, runComplianceChecks } from './checker.js';
