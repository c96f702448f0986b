// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "cli.hpp"

int main( int argc, char **argv )
{
    return dufay::cli::run( argc, argv );
}
