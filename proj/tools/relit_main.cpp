// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/cli.hpp"

int main(int argc, char **argv) { return relit::dispatch(argc, argv); }
