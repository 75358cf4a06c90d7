"""核心服務層 - 訊號產生、前處理、共形預測與評估"""
