# Core Module
