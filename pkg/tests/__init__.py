# File intentionally left empty, its purpose is to allow relative imports within the tests folder.
