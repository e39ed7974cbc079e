#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ward_ident.h"

static const char *GRID =
    "{\"s_base_mva\": 100, \"f_nominal_hz\": 50,"
    " \"buses\": [{\"id\": \"B1\", \"base_kv\": 230, \"kind\": \"slack\", \"v_set\": 1.0},"
    "             {\"id\": \"B2\", \"base_kv\": 230, \"kind\": \"pq\"}],"
    " \"branches\": [{\"id\": \"L12\", \"from\": \"B1\", \"to\": \"B2\","
    "               \"impedance\": {\"s_base_mva\": 100, \"r\": 0.0, \"x\": 0.1}}],"
    " \"loads\": [{\"id\": \"LD2\", \"bus\": \"B2\", \"p_mw\": 50, \"q_mvar\": 0}]}";

int main(void) {
    WiNetwork *net = NULL;
    if (wi_network_from_json(GRID, &net) != WI_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", wi_last_error_message());
        return 1;
    }
    double v[2], theta[2];
    size_t iterations = 0;
    WiStatus st = wi_power_flow(net, v, theta, 2, &iterations);
    wi_network_free(net);
    net = NULL;
    if (st != WI_STATUS_OK) {
        fprintf(stderr, "power flow: %s\n", wi_last_error_message());
        return 1;
    }
    if (fabs(v[1] - 0.998746) > 1e-6) {
        fprintf(stderr, "unexpected |V2| = %.9f\n", v[1]);
        return 1;
    }
    if (wi_network_from_json("{", &net) != WI_STATUS_VALIDATION || net != NULL) {
        return 1;
    }
    printf("ok %s %.6f\n", wi_version(), v[1]);
    return 0;
}
