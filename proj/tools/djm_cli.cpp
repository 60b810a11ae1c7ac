#include <iostream>

#include "djm/cli.hpp"

int main(int argc, char **argv)
{
    return djm::cli::run_main(argc, argv, std::cout, std::cerr);
}
