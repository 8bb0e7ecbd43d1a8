# Phase 1 tests
