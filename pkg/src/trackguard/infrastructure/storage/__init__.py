"""產物檔案的讀寫"""
