#include <stdio.h>
#include <string.h>

#include "lanchester_ncw.h"

int main(void) {
    NcwScenario *scn = NULL;
    if (ncw_scenario_preset("exp3", &scn) != NCW_STATUS_OK) {
        fprintf(stderr, "%s\n", ncw_last_error_message());
        return 1;
    }
    double b[3];
    if (ncw_threat_rates(scn, b, 3) != NCW_STATUS_OK) return 2;
    if (ncw_threat_rates(scn, b, 2) != NCW_STATUS_BUFFER_TOO_SMALL) return 3;

    NcwCampaign *c = NULL;
    if (ncw_plan_campaign(scn, 1e-3, 100.0, &c) != NCW_STATUS_OK) return 4;
    size_t stages = 0;
    ncw_campaign_stage_count(c, &stages);
    int targets[3] = {-2, -2, -2};
    for (size_t k = 0; k < stages && k < 3; k++) ncw_campaign_stage_target(c, k, &targets[k]);
    double blue = 0.0;
    ncw_campaign_final_state(c, NULL, &blue, NULL);
    NcwOutcome outcome;
    ncw_campaign_outcome(c, &outcome);

    printf("b=%.2f,%.2f,%.2f stages=%zu targets=%d,%d,%d outcome=%d blue=%.3f\n",
           b[0], b[1], b[2], stages, targets[0], targets[1], targets[2], (int)outcome, blue);
    ncw_campaign_free(c);
    ncw_scenario_free(scn);
    return 0;
}
