#include "mlqd/cli.hpp"

int main(int argc, char** argv)
{
    return mlqd::cli_main(argc, argv);
}
