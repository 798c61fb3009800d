#include <stdio.h>
#include <string.h>
#include "embedkit.h"

int main(int argc, char **argv) {
    if (argc != 2) return 64;
    EkStore *store = NULL;
    if (ek_store_load(argv[1], &store) != EK_STATUS_OK) {
        fprintf(stderr, "%s\n", ek_last_error_message());
        return 1;
    }
    size_t idx = 0;
    int oov = -1;
    if (ek_solve_analogy(store, "man", "woman", "king", 100, &idx, &oov) != EK_STATUS_OK || oov) return 2;
    char buf[32];
    size_t len = 0;
    if (ek_store_word(store, idx, buf, sizeof buf, &len) != EK_STATUS_OK) return 3;
    if (ek_store_lookup(store, "unicorn", &idx) != EK_STATUS_NOT_FOUND) return 4;
    printf("%s %zu %zu\n", buf, ek_store_len(store), ek_store_dim(store));
    ek_store_free(store);
    return 0;
}
