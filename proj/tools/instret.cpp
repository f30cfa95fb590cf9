#include <iostream>

#include "instret/cli/cli.hpp"

int main(int argc, char** argv)
{
    return instret::cli::run(argc, argv, std::cout, std::cerr);
}
