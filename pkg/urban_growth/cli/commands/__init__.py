# Command Modules
