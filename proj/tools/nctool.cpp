#include <iostream>

#include "ncentre/cli.hpp"

int main(int argc, char** argv)
{
    return ncentre::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
