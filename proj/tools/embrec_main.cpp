// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "embrec/cli.hpp"

int main(int argc, char** argv) { return embrec::cli::cli_main(argc, argv); }
