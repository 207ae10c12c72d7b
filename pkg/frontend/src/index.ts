export * from './queryState';
export * from './columns';
export * from './api';
export * from './views';
