#include <iuprobe/stats.hpp>

#include <vector>

int main() {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    return iuprobe::cliffs_delta(a, b).delta == -1.0 ? 0 : 1;
}
