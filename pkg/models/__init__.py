# models package: measures, chaos elements, coefficient paths and check reports
